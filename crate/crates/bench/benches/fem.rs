use std::hint::black_box;

use cellforce_bench::reference_mesh;
use cellforce_core::forces::{rhs_smoothed_gaussian, segments_matching_mesh};
use cellforce_core::{
    assemble, discretize_cell_boundary, solve, ForceModel, MaterialParams, OuterBc, SolveMethod,
    SolveOptions, Traction,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble");
    for h in [0.5, 0.25] {
        let mesh = reference_mesh(h, false);
        g.bench_with_input(BenchmarkId::from_parameter(h), &mesh, |b, m| {
            b.iter(|| assemble(black_box(m), &MaterialParams::default(), OuterBc::Dirichlet).unwrap())
        });
    }
    g.finish();
}

fn solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    let mesh = reference_mesh(0.5, false);
    let cell = *mesh.cell();
    let sys = assemble(&mesh, &MaterialParams::default(), OuterBc::Dirichlet).unwrap();
    let rhs = ForceModel::PointForces { segments: segments_matching_mesh(&mesh) }
        .build_rhs(&mesh, &cell, &Traction::Uniform(1.0))
        .unwrap();
    for method in [SolveMethod::CgJacobi, SolveMethod::DirectCholesky] {
        let opts = SolveOptions { method, ..SolveOptions::default() };
        g.bench_function(method.to_string(), |b| {
            b.iter(|| solve(&sys, black_box(&rhs), &opts).unwrap())
        });
    }
    g.finish();
}

fn gaussian_load(c: &mut Criterion) {
    let mut g = c.benchmark_group("smoothed_rhs");
    g.sample_size(10);
    let mesh = reference_mesh(0.25, false);
    let geom = discretize_cell_boundary(mesh.cell(), segments_matching_mesh(&mesh)).unwrap();
    for eps in [1.0, 0.5, 0.25] {
        g.bench_with_input(BenchmarkId::from_parameter(eps), &eps, |b, &eps| {
            b.iter(|| rhs_smoothed_gaussian(&mesh, &geom, &Traction::Uniform(1.0), eps).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, solvers, gaussian_load);
criterion_main!(benches);

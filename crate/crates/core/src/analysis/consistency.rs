use crate::elasticity::{assemble, MaterialParams, OuterBc};
use crate::forces::{
    discretize_cell_boundary, rhs_hole_neumann, rhs_point_forces, rhs_smoothed_gaussian,
    rhs_smoothed_particle_gradient, Traction,
};
use crate::geometry::{Point2, SquareCell};
use crate::mesh::{generate_mesh, EdgeTag, Mesh, Region};
use crate::quadrature::gauss_legendre;
use crate::solver::{solve, SolveOptions};

use super::{field_h1_norm, loglog_slope, AnalysisError, Solution};

/// Stiffness-ratio sweep against the hole solution.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaSweep {
    /// `(ratio, |u_ratio - u_hole|_{H1(substrate)})`, in the order given.
    pub points: Vec<(f64, f64)>,
    /// Log-log slope of the gap against the ratio.
    pub slope: f64,
    /// Whether the gap never grows as the ratio decreases.
    pub monotone: bool,
}

/// Solves the softened-cell problem on `full` for each ratio and compares
/// it with the hole problem on the matching hole mesh, both loaded by the
/// same cavity-wall traction.
pub fn beta_consistency_sweep(
    full: &Mesh,
    params: &MaterialParams,
    bc: OuterBc,
    ratios: &[f64],
    opts: &SolveOptions,
) -> Result<BetaSweep, AnalysisError> {
    let (w, h) = full.domain_size();
    let hole = generate_mesh((w, h), full.h_target(), full.cell(), true)?;
    let traction = Traction::Uniform(params.traction);
    let hole_rhs = rhs_hole_neumann(&hole, &traction)?;
    let hole_sys = assemble(&hole, params, bc)?;
    let (u_hole, _) = solve(&hole_sys, &hole_rhs, opts)?;

    let map = hole.node_map_to(full);
    let mut full_rhs = vec![0.0; full.num_dofs()];
    let mut u_hole_on_full = vec![0.0; full.num_dofs()];
    for (i, j) in map.iter().enumerate() {
        let j = j.ok_or(AnalysisError::MeshMismatch)?;
        for c in 0..2 {
            full_rhs[2 * j + c] = hole_rhs[2 * i + c];
            u_hole_on_full[2 * j + c] = u_hole[2 * i + c];
        }
    }

    let mut points = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let p = MaterialParams {
            cell_stiffness_ratio: ratio,
            ..*params
        };
        let sys = assemble(full, &p, bc)?;
        let (u, _) = solve(&sys, &full_rhs, opts)?;
        let diff: Vec<f64> = u.iter().zip(&u_hole_on_full).map(|(a, b)| a - b).collect();
        let gap = field_h1_norm(full, &diff, Some(Region::Exterior));
        log::info!("stiffness ratio {ratio:e}: substrate H1 gap {gap:e}");
        points.push((ratio, gap));
    }

    let mut by_ratio = points.clone();
    by_ratio.sort_by(|a, b| b.0.total_cmp(&a.0));
    let monotone = by_ratio.windows(2).all(|w| w[1].1 <= w[0].1);
    if !monotone {
        log::warn!("substrate gap is not monotone in the stiffness ratio");
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let slope = loglog_slope(&x, &y)?;
    Ok(BetaSweep {
        points,
        slope,
        monotone,
    })
}

/// Global force balance of a spring-supported solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentumBalance {
    /// `int_{outer} kappa u dS`.
    pub boundary_reaction: Point2,
    /// `int_{cell} P n dS`.
    pub applied: Point2,
    pub gap: f64,
}

/// Compares the spring reaction on the outer boundary with the net force
/// applied on the cell boundary.
pub fn momentum_balance(
    sol: &Solution,
    bc: OuterBc,
    cell: &SquareCell,
    traction: &Traction,
) -> Result<MomentumBalance, AnalysisError> {
    let OuterBc::Robin(kappa) = bc else {
        return Err(AnalysisError::NeedsRobin);
    };
    let mesh = sol.mesh();
    let mut reaction = Point2::default();
    for e in mesh.boundary_edges() {
        if e.tag != EdgeTag::OuterBoundary {
            continue;
        }
        let [a, b] = e.nodes;
        let len = mesh.nodes()[a].distance(mesh.nodes()[b]);
        reaction = reaction + (sol.at(a) + sol.at(b)) * (0.5 * kappa * len);
    }
    let (gx, gw) = gauss_legendre(16);
    let half = 0.5 * cell.side;
    let c = cell.corners();
    let sides = [
        (c[0], Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)),
        (c[1], Point2::new(0.0, 1.0), Point2::new(-1.0, 0.0)),
        (c[2], Point2::new(-1.0, 0.0), Point2::new(0.0, -1.0)),
        (c[3], Point2::new(0.0, -1.0), Point2::new(1.0, 0.0)),
    ];
    let mut applied = Point2::default();
    for (start, dir, normal) in sides {
        for (x, w) in gx.iter().zip(&gw) {
            let p = start + dir * (half * (1.0 + x));
            applied = applied + normal * (w * half * traction.at(p));
        }
    }
    Ok(MomentumBalance {
        boundary_reaction: reaction,
        applied,
        gap: (reaction - applied).norm(),
    })
}

/// Gaps between the point-force, smoothed and particle-gradient solutions
/// for one small cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingGap {
    pub cell_width: f64,
    pub eps: f64,
    /// `|u_smoothed - u_point|_{H1}`.
    pub smoothed_vs_point: f64,
    /// `|u_particle - u_smoothed|_{H1} / cell_width^2`.
    pub particle_vs_smoothed_scaled: f64,
    /// `|u_particle - u_point|_{H1}`.
    pub particle_vs_point: f64,
}

/// For each `(cell_width, eps)` pair, loads a square cell of that width at
/// `center` with one point force per face, with the same forces smoothed by
/// Gaussians of width `eps`, and with the particle-gradient force, and
/// measures the H1 gaps between the three solutions.
pub fn smoothing_consistency_sweep(
    mesh: &Mesh,
    params: &MaterialParams,
    bc: OuterBc,
    center: Point2,
    pairs: &[(f64, f64)],
    opts: &SolveOptions,
) -> Result<Vec<SmoothingGap>, AnalysisError> {
    let sys = assemble(mesh, params, bc)?;
    let traction = Traction::Uniform(params.traction);
    let mut point_cache: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut out = Vec::with_capacity(pairs.len());
    for &(width, eps) in pairs {
        if eps < mesh.h_target() {
            log::warn!("Gaussian width {eps} is below the mesh size {}", mesh.h_target());
        }
        let cell = discretize_cell_boundary(&SquareCell::new(center, width), 4)?;
        let u_point = match point_cache.iter().find(|(w, _)| *w == width) {
            Some((_, u)) => u.clone(),
            None => {
                let rhs = rhs_point_forces(mesh, &cell, &traction)?;
                let u = solve(&sys, &rhs, opts)?.0;
                point_cache.push((width, u.clone()));
                u
            }
        };
        let rhs = rhs_smoothed_gaussian(mesh, &cell, &traction, eps)?;
        let u_smooth = solve(&sys, &rhs, opts)?.0;
        let rhs = rhs_smoothed_particle_gradient(mesh, center, params.traction, eps, width)?;
        let u_particle = solve(&sys, &rhs, opts)?.0;
        let gap = |a: &[f64], b: &[f64]| {
            let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            field_h1_norm(mesh, &d, None)
        };
        let g = SmoothingGap {
            cell_width: width,
            eps,
            smoothed_vs_point: gap(&u_smooth, &u_point),
            particle_vs_smoothed_scaled: gap(&u_particle, &u_smooth) / (width * width),
            particle_vs_point: gap(&u_particle, &u_point),
        };
        log::info!("smoothing gaps {g:?}");
        out.push(g);
    }
    Ok(out)
}

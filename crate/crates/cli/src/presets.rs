//! The experiment presets. Each has a typed entry point returning its results
//! and a [`Report`] builder used by the binary.

use std::fmt;

use anyhow::{Context, Result};
use cellforce_core::analysis::{
    beta_consistency_sweep, loglog_slope, midpoint_quadrature_order, momentum_balance,
    render_svg, smoothing_consistency_sweep, MomentumBalance, SmoothingGap, Surface, SvgStyle,
};
use cellforce_core::forces::segments_matching_mesh;
use cellforce_core::verify1d::{solve_1d, Cell1D, Solution1D};
use cellforce_core::{
    area_reduction, assemble, generate_mesh, l2_norm_in, solve, ConvergenceStudy, ForceModel,
    MaterialParams, Mesh, OuterBc, Point2, Region, Solution, SolveReport, SquareCell, Traction,
};

use crate::checks::{structural_checks, StructuralReport};
use crate::config::ExperimentConfig;
use crate::report::{num, Report, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    CompareApproaches,
    ConvergenceTable,
    BetaSweep,
    EpsilonSweep,
    QuadratureOrder,
    #[value(name = "verify-1d")]
    Verify1d,
    MomentumCheck,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::CompareApproaches,
        Preset::ConvergenceTable,
        Preset::BetaSweep,
        Preset::EpsilonSweep,
        Preset::QuadratureOrder,
        Preset::Verify1d,
        Preset::MomentumCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::CompareApproaches => "compare-approaches",
            Preset::ConvergenceTable => "convergence-table",
            Preset::BetaSweep => "beta-sweep",
            Preset::EpsilonSweep => "epsilon-sweep",
            Preset::QuadratureOrder => "quadrature-order",
            Preset::Verify1d => "verify-1d",
            Preset::MomentumCheck => "momentum-check",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs `preset` and collects its table, summary and files.
pub fn run(preset: Preset, cfg: &ExperimentConfig) -> Result<Report> {
    match preset {
        Preset::CompareApproaches => compare_approaches_report(cfg),
        Preset::ConvergenceTable => convergence_table_report(cfg),
        Preset::BetaSweep => beta_sweep_report(cfg),
        Preset::EpsilonSweep => epsilon_sweep_report(cfg),
        Preset::QuadratureOrder => quadrature_order_report(cfg),
        Preset::Verify1d => verify_1d_report(cfg),
        Preset::MomentumCheck => momentum_check_report(cfg),
    }
}

/// How the cell force enters the substrate problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Approach {
    /// Softened cell inside the mesh, point forces on its boundary.
    Immersed,
    /// Cell cut out of the mesh, traction on the cavity wall.
    Hole,
    /// Softened cell inside the mesh, Gaussian-smoothed boundary forces.
    Smoothed,
}

impl Approach {
    pub const ALL: [Approach; 3] = [Approach::Immersed, Approach::Hole, Approach::Smoothed];

    pub fn name(self) -> &'static str {
        match self {
            Approach::Immersed => "immersed",
            Approach::Hole => "hole",
            Approach::Smoothed => "smoothed",
        }
    }

    fn excludes_cell(self) -> bool {
        self == Approach::Hole
    }
}

/// One solved approach on one mesh.
#[derive(Debug)]
pub struct ApproachRun {
    pub approach: Approach,
    pub mesh: Mesh,
    pub displacement: Vec<f64>,
    pub solve: SolveReport,
    pub structural: StructuralReport,
}

impl ApproachRun {
    pub fn solution(&self) -> Solution<'_> {
        Solution::new(&self.mesh, self.displacement.clone()).expect("sized by the solver")
    }

    /// Substrate L2 norm of the displacement.
    pub fn substrate_l2(&self) -> f64 {
        l2_norm_in(&self.solution(), Region::Exterior)
    }

    pub fn cell_area_reduction(&self) -> Result<f64> {
        let lp = self.mesh.cell_boundary_loop()?;
        Ok(area_reduction(&self.solution(), &lp)?.percent)
    }

    pub fn region_area_reduction(&self, lo: Point2, hi: Point2) -> Result<f64> {
        let lp = self.mesh.rectangle_loop(lo, hi)?;
        Ok(area_reduction(&self.solution(), &lp)?.percent)
    }
}

pub fn approach_mesh(cfg: &ExperimentConfig, approach: Approach, h: f64) -> Result<Mesh> {
    let g = &cfg.geometry;
    generate_mesh((g.width, g.height), h, &g.cell(), approach.excludes_cell())
        .with_context(|| format!("meshing the {} problem at h = {h}", approach.name()))
}

/// Assembles, loads and solves one approach on `mesh`. Requested dumps are
/// appended to `artifacts`.
pub fn run_approach(
    cfg: &ExperimentConfig,
    approach: Approach,
    mesh: Mesh,
    bc: OuterBc,
    artifacts: &mut Vec<(String, String)>,
) -> Result<ApproachRun> {
    let segments = match cfg.model.segments {
        0 => segments_matching_mesh(&mesh),
        n => n,
    };
    let model = match approach {
        Approach::Immersed => ForceModel::PointForces { segments },
        Approach::Hole => ForceModel::HoleNeumann,
        Approach::Smoothed => ForceModel::SmoothedGaussian {
            eps: cfg.model.eps,
            segments,
        },
    };
    let cell = cfg.geometry.cell();
    let traction = Traction::Uniform(cfg.material.traction);
    let rhs = model.build_rhs(&mesh, &cell, &traction)?;
    let system = assemble(&mesh, &cfg.params(), bc)?;
    let (displacement, report) = solve(&system, &rhs, &cfg.solver.options())
        .with_context(|| format!("solving the {} problem", approach.name()))?;
    log::info!(
        "{} h={} dofs={} iterations={} residual={:.3e} time={:.3}s",
        approach.name(),
        mesh.h_target(),
        mesh.num_dofs(),
        report.iterations,
        report.relative_residual,
        report.wall_time
    );
    let structural = structural_checks(&mesh, &system, &rhs, &displacement, cfg.seed);

    let tag = format!("{}_h{}", approach.name(), mesh.h_target());
    let o = &cfg.outputs;
    if o.dump_mesh {
        let mut buf = Vec::new();
        mesh.write_text(&mut buf)?;
        artifacts.push((format!("mesh_{tag}.txt"), String::from_utf8(buf)?));
    }
    if o.dump_matrix {
        let mut buf = Vec::new();
        system.write_coo(&mut buf)?;
        artifacts.push((format!("matrix_{tag}.coo"), String::from_utf8(buf)?));
    }
    if o.dump_rhs {
        let mut t = Table::new(&["dof", "value"]);
        for (i, v) in rhs.iter().enumerate() {
            t.push(vec![i.to_string(), num(*v)]);
        }
        artifacts.push((format!("rhs_{tag}.csv"), t.to_csv_string()));
    }

    Ok(ApproachRun {
        approach,
        mesh,
        displacement,
        solve: report,
        structural,
    })
}

fn push_structural(report: &mut Report, label: &str, s: &StructuralReport) {
    for f in s.failures() {
        report.violations.push(format!("{label}: {f}"));
    }
}

/// Area changes and norms of the three approaches on one mesh size.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproachSummary {
    pub approach: Approach,
    pub h: f64,
    pub dofs: usize,
    pub cell_area_reduction: f64,
    pub region_area_reduction: f64,
    pub substrate_l2: f64,
    pub iterations: usize,
    pub wall_time: f64,
    pub structural: StructuralReport,
}

pub fn compare_approaches(
    cfg: &ExperimentConfig,
    artifacts: &mut Vec<(String, String)>,
) -> Result<Vec<ApproachSummary>> {
    let h = cfg.discretization.h;
    let (lo, hi) = cfg.geometry.wound();
    let mut out = Vec::new();
    for approach in Approach::ALL {
        let mesh = approach_mesh(cfg, approach, h)?;
        let run = run_approach(cfg, approach, mesh, cfg.outer_bc(), artifacts)?;
        if cfg.outputs.svg {
            let style = SvgStyle {
                scale: cfg.outputs.svg_scale,
                ..SvgStyle::default()
            };
            artifacts.push((
                format!("{}.svg", approach.name()),
                render_svg(&run.solution(), &style),
            ));
        }
        out.push(ApproachSummary {
            approach,
            h,
            dofs: run.mesh.num_dofs(),
            cell_area_reduction: run.cell_area_reduction()?,
            region_area_reduction: run.region_area_reduction(lo, hi)?,
            substrate_l2: run.substrate_l2(),
            iterations: run.solve.iterations,
            wall_time: run.solve.wall_time,
            structural: run.structural,
        });
    }
    Ok(out)
}

fn compare_approaches_report(cfg: &ExperimentConfig) -> Result<Report> {
    let mut artifacts = Vec::new();
    let rows = compare_approaches(cfg, &mut artifacts)?;
    let mut table = Table::new(&[
        "approach",
        "h",
        "dofs",
        "cell_area_reduction",
        "region_area_reduction",
        "substrate_l2",
        "iterations",
    ]);
    for r in &rows {
        table.push(vec![
            r.approach.name().into(),
            num(r.h),
            r.dofs.to_string(),
            num(r.cell_area_reduction),
            num(r.region_area_reduction),
            num(r.substrate_l2),
            r.iterations.to_string(),
        ]);
    }
    let mut report = Report::new(Preset::CompareApproaches.name(), table);
    report.artifacts = artifacts;
    for r in &rows {
        let a = r.approach.name();
        report.metric(format!("{a}.cell_area_reduction_percent"), r.cell_area_reduction);
        report.metric(format!("{a}.region_area_reduction_percent"), r.region_area_reduction);
        report.metric(format!("{a}.substrate_l2"), r.substrate_l2);
        report.note(format!("{a}.time_s"), format!("{:.3}", r.wall_time));
        push_structural(&mut report, a, &r.structural);
    }
    Ok(report)
}

/// Substrate L2 norms under uniform refinement, per approach.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub approach: Approach,
    /// `(h, substrate L2, iterations)` per level, coarse to fine.
    pub levels: Vec<(f64, f64, usize)>,
    /// Order from the last three levels; `None` with fewer levels.
    pub order: Option<f64>,
    pub structural: Vec<StructuralReport>,
}

pub fn convergence_table(
    cfg: &ExperimentConfig,
    artifacts: &mut Vec<(String, String)>,
) -> Result<Vec<ConvergenceRow>> {
    let mut out = Vec::new();
    for approach in Approach::ALL {
        let mut mesh = approach_mesh(cfg, approach, cfg.discretization.h)?;
        let mut study = ConvergenceStudy::default();
        let mut levels = Vec::new();
        let mut structural = Vec::new();
        for level in 0..cfg.discretization.levels {
            if level > 0 {
                mesh = mesh.refine();
            }
            let h = mesh.h_target();
            let run = run_approach(cfg, approach, mesh, cfg.outer_bc(), artifacts)?;
            let l2 = run.substrate_l2();
            study.push(h, l2);
            levels.push((h, l2, run.solve.iterations));
            structural.push(run.structural);
            mesh = run.mesh;
        }
        let order = if study.levels.len() >= 3 {
            Some(study.estimated_order()?)
        } else {
            None
        };
        out.push(ConvergenceRow {
            approach,
            levels,
            order,
            structural,
        });
    }
    Ok(out)
}

fn convergence_table_report(cfg: &ExperimentConfig) -> Result<Report> {
    let mut artifacts = Vec::new();
    let rows = convergence_table(cfg, &mut artifacts)?;
    let mut table = Table::new(&["approach", "h", "substrate_l2", "iterations", "order"]);
    for r in &rows {
        let last = r.levels.len() - 1;
        for (k, &(h, l2, it)) in r.levels.iter().enumerate() {
            let order = match (k == last, r.order) {
                (true, Some(o)) => num(o),
                _ => String::new(),
            };
            table.push(vec![r.approach.name().into(), num(h), num(l2), it.to_string(), order]);
        }
    }
    let mut report = Report::new(Preset::ConvergenceTable.name(), table);
    report.artifacts = artifacts;
    for r in &rows {
        let a = r.approach.name();
        for &(h, l2, _) in &r.levels {
            report.metric(format!("{a}.substrate_l2[h={h}]"), l2);
        }
        if let Some(o) = r.order {
            report.metric(format!("{a}.order"), o);
        }
        for (s, &(h, _, _)) in r.structural.iter().zip(&r.levels) {
            push_structural(&mut report, &format!("{a} h={h}"), s);
        }
    }
    Ok(report)
}

pub fn beta_sweep(cfg: &ExperimentConfig) -> Result<cellforce_core::analysis::BetaSweep> {
    let full = approach_mesh(cfg, Approach::Immersed, cfg.discretization.h)?;
    Ok(beta_consistency_sweep(
        &full,
        &cfg.params(),
        cfg.outer_bc(),
        &cfg.sweeps.betas,
        &cfg.solver.options(),
    )?)
}

fn beta_sweep_report(cfg: &ExperimentConfig) -> Result<Report> {
    let sweep = beta_sweep(cfg)?;
    let mut table = Table::new(&["stiffness_ratio", "substrate_h1_gap"]);
    for &(b, g) in &sweep.points {
        table.push(vec![num(b), num(g)]);
    }
    let mut report = Report::new(Preset::BetaSweep.name(), table);
    report.metric("slope", sweep.slope);
    report.note("monotone", sweep.monotone);
    if !sweep.monotone {
        report
            .violations
            .push("substrate gap grows as the stiffness ratio decreases".into());
    }
    Ok(report)
}

/// The three smoothing studies and their fitted exponents.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonSweep {
    /// Fixed cell width, varying Gaussian width.
    pub width_fixed: Vec<SmoothingGap>,
    /// Fixed Gaussian width, varying cell width.
    pub eps_fixed: Vec<SmoothingGap>,
    /// Gaussian width equal to the cell width.
    pub combined: Vec<SmoothingGap>,
    /// Slope of smoothed-vs-point gap against the Gaussian width.
    pub eps_exponent: f64,
    /// Slope of the scaled particle-vs-smoothed gap against the cell width.
    pub width_exponent: f64,
    /// Whether the particle-vs-point gap shrinks at every combined level.
    pub combined_monotone: bool,
}

/// Runs on a uniform substrate (unit stiffness ratio) so that the small
/// cells do not sit in a softened region.
pub fn epsilon_sweep(cfg: &ExperimentConfig) -> Result<EpsilonSweep> {
    let s = &cfg.sweeps;
    let g = &cfg.geometry;
    let mesh = generate_mesh((g.width, g.height), s.smoothing_h, &g.cell(), false)?;
    let params = MaterialParams {
        cell_stiffness_ratio: 1.0,
        ..cfg.params()
    };
    let opts = cfg.solver.options();
    let sweep = |pairs: Vec<(f64, f64)>| {
        smoothing_consistency_sweep(&mesh, &params, cfg.outer_bc(), g.center(), &pairs, &opts)
    };
    let width_fixed = sweep(s.widths_eps.iter().map(|&e| (s.fixed_width, e)).collect())?;
    let eps_fixed = sweep(s.cell_widths.iter().map(|&w| (w, s.fixed_eps)).collect())?;
    let combined = sweep(s.combined.iter().map(|&w| (w, w)).collect())?;

    let eps: Vec<f64> = width_fixed.iter().map(|r| r.eps).collect();
    let gap1: Vec<f64> = width_fixed.iter().map(|r| r.smoothed_vs_point).collect();
    let widths: Vec<f64> = eps_fixed.iter().map(|r| r.cell_width).collect();
    let gap2: Vec<f64> = eps_fixed.iter().map(|r| r.particle_vs_smoothed_scaled).collect();
    let combined_monotone = combined
        .windows(2)
        .all(|w| w[1].particle_vs_point < w[0].particle_vs_point);
    Ok(EpsilonSweep {
        eps_exponent: loglog_slope(&eps, &gap1)?,
        width_exponent: loglog_slope(&widths, &gap2)?,
        width_fixed,
        eps_fixed,
        combined,
        combined_monotone,
    })
}

fn epsilon_sweep_report(cfg: &ExperimentConfig) -> Result<Report> {
    let r = epsilon_sweep(cfg)?;
    let mut table = Table::new(&[
        "study",
        "cell_width",
        "eps",
        "smoothed_vs_point",
        "particle_vs_smoothed_scaled",
        "particle_vs_point",
    ]);
    for (study, rows) in [
        ("width_fixed", &r.width_fixed),
        ("eps_fixed", &r.eps_fixed),
        ("combined", &r.combined),
    ] {
        for g in rows.iter() {
            table.push(vec![
                study.into(),
                num(g.cell_width),
                num(g.eps),
                num(g.smoothed_vs_point),
                num(g.particle_vs_smoothed_scaled),
                num(g.particle_vs_point),
            ]);
        }
    }
    let mut report = Report::new(Preset::EpsilonSweep.name(), table);
    report.metric("eps_exponent", r.eps_exponent);
    report.metric("width_exponent", r.width_exponent);
    report.note("combined_monotone", r.combined_monotone);
    Ok(report)
}

/// Midpoint-rule studies on the cell boundary and on a unit cube.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureOrders {
    pub square: ConvergenceStudy,
    pub cube: ConvergenceStudy,
}

pub fn square_integrand(p: [f64; 3]) -> f64 {
    (0.3 * p[0] + 0.5 * p[1]).exp()
}

pub fn cube_integrand(p: [f64; 3]) -> f64 {
    (0.3 * p[0] + 0.5 * p[1] + 0.7 * p[2]).exp()
}

pub fn quadrature_order(cfg: &ExperimentConfig) -> QuadratureOrders {
    let levels = cfg.sweeps.quadrature_levels;
    QuadratureOrders {
        square: midpoint_quadrature_order(
            &Surface::Square(cfg.geometry.cell()),
            &square_integrand,
            levels,
        ),
        cube: midpoint_quadrature_order(
            &Surface::Cube {
                origin: [0.0; 3],
                side: 1.0,
            },
            &cube_integrand,
            levels,
        ),
    }
}

fn quadrature_order_report(cfg: &ExperimentConfig) -> Result<Report> {
    let q = quadrature_order(cfg);
    let mut table = Table::new(&["surface", "diameter", "error"]);
    for (name, study) in [("square", &q.square), ("cube", &q.cube)] {
        for &(d, e) in &study.levels {
            table.push(vec![name.into(), num(d), num(e)]);
        }
    }
    let mut report = Report::new(Preset::QuadratureOrder.name(), table);
    report.metric("square.order", q.square.fitted_order()?);
    report.metric("cube.order", q.cube.fitted_order()?);
    Ok(report)
}

pub fn verify_1d(cfg: &ExperimentConfig) -> Result<(Cell1D, Solution1D)> {
    let g = &cfg.geometry;
    let cell = Cell1D::new(g.width, g.center().x, g.cell_side)?;
    let sol = solve_1d(&cell, cfg.sweeps.nodes_1d, true)?;
    Ok((cell, sol))
}

fn verify_1d_report(cfg: &ExperimentConfig) -> Result<Report> {
    let (cell, sol) = verify_1d(cfg)?;
    let mut table = Table::new(&["x", "u", "exact"]);
    for (&x, &u) in sol.nodes.iter().zip(&sol.values) {
        let exact = cellforce_core::verify1d::exact_1d(&cell, x)?;
        table.push(vec![num(x), num(u), num(exact)]);
    }
    let mut report = Report::new(Preset::Verify1d.name(), table);
    report.metric("max_nodal_error", sol.max_nodal_error(&cell));
    report.metric("l2_error", sol.l2_error(&cell));
    Ok(report)
}

/// Force balance of one spring-supported run.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumCheck {
    pub approach: Approach,
    pub balance: MomentumBalance,
    /// `1e-6 kappa |outer boundary| max |u|`.
    pub bound: f64,
    pub structural: StructuralReport,
}

impl MomentumCheck {
    pub fn passes(&self) -> bool {
        self.balance.gap <= self.bound
    }
}

/// Immersed and hole runs with spring supports, whatever the configured
/// outer condition.
pub fn momentum_check(
    cfg: &ExperimentConfig,
    artifacts: &mut Vec<(String, String)>,
) -> Result<Vec<MomentumCheck>> {
    let kappa = cfg.material.spring_constant;
    let bc = OuterBc::Robin(kappa);
    let g = &cfg.geometry;
    let perimeter = 2.0 * (g.width + g.height);
    let cell: SquareCell = g.cell();
    let traction = Traction::Uniform(cfg.material.traction);
    let mut out = Vec::new();
    for approach in [Approach::Immersed, Approach::Hole] {
        let mesh = approach_mesh(cfg, approach, cfg.discretization.h)?;
        let run = run_approach(cfg, approach, mesh, bc, artifacts)?;
        let sol = run.solution();
        let balance = momentum_balance(&sol, bc, &cell, &traction)?;
        out.push(MomentumCheck {
            approach,
            balance,
            bound: 1e-6 * kappa * perimeter * sol.max_magnitude(),
            structural: run.structural,
        });
    }
    Ok(out)
}

fn momentum_check_report(cfg: &ExperimentConfig) -> Result<Report> {
    let mut artifacts = Vec::new();
    let rows = momentum_check(cfg, &mut artifacts)?;
    let mut table = Table::new(&[
        "approach",
        "reaction_x",
        "reaction_y",
        "applied_x",
        "applied_y",
        "gap",
        "bound",
    ]);
    for r in &rows {
        let b = &r.balance;
        table.push(vec![
            r.approach.name().into(),
            num(b.boundary_reaction.x),
            num(b.boundary_reaction.y),
            num(b.applied.x),
            num(b.applied.y),
            num(b.gap),
            num(r.bound),
        ]);
    }
    let mut report = Report::new(Preset::MomentumCheck.name(), table);
    report.artifacts = artifacts;
    for r in &rows {
        let a = r.approach.name();
        report.metric(format!("{a}.gap"), r.balance.gap);
        report.metric(format!("{a}.bound"), r.bound);
        if !r.passes() {
            report.violations.push(format!(
                "{a}: momentum gap {:.3e} exceeds {:.3e}",
                r.balance.gap, r.bound
            ));
        }
        push_structural(&mut report, a, &r.structural);
    }
    Ok(report)
}

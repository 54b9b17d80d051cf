use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use cellforce_cli::{run, ExperimentConfig, Preset};
use clap::Parser;

/// Finite-element experiments on cell traction forces in an elastic substrate.
#[derive(Parser, Debug)]
#[command(name = "cellforce", version)]
struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    preset: Preset,
    /// TOML configuration file; built-in defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set discretization.h=0.25`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides `outputs.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the mesh of every solve.
    #[arg(long)]
    dump_mesh: bool,
    /// Write the assembled stiffness matrix of every solve (COO).
    #[arg(long)]
    dump_matrix: bool,
    /// Write the load vector of every solve.
    #[arg(long)]
    dump_rhs: bool,
    /// Write SVG plots of the deformed meshes.
    #[arg(long)]
    svg: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main(args: Args) -> Result<bool> {
    let base = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let mut cfg = base.with_overrides(&args.overrides)?;
    if let Some(dir) = args.out {
        cfg.outputs.dir = dir;
    }
    cfg.outputs.dump_mesh |= args.dump_mesh;
    cfg.outputs.dump_matrix |= args.dump_matrix;
    cfg.outputs.dump_rhs |= args.dump_rhs;
    cfg.outputs.svg |= args.svg;

    let report = run(args.preset, &cfg)?;
    let csv = report.write_files(&cfg.outputs.dir)?;
    print!("{}", report.summary_text());
    println!("csv = {}", csv.display());
    for v in &report.violations {
        log::error!("{v}");
    }
    Ok(report.violations.is_empty())
}

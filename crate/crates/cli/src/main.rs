use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sphvisc::harness::{all_criteria, single_report, sweep_report, Criterion};
use sphvisc::io::{
    report_rows, status_of, trajectory_rows, write_atomic, write_csv, write_json, write_sweep_artifacts, RunManifest,
    RunStatus, SCHEMA_VERSION,
};

mod config;

use config::RunConfig;

const EXIT_ERROR: u8 = 1;
const EXIT_CRITERION: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "sphvisc", version, about = "Viscous radial gas dynamics runs and viscosity sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the per-viscosity runs of a sweep.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for the random test functions (overrides `tests.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One viscosity: trajectory CSV, manifest JSON and report CSV.
    Run { config: PathBuf },
    /// Every viscosity of the schedule: report CSV/JSON and one plot per tracked quantity.
    Sweep {
        config: PathBuf,
        /// Also evaluate the criteria that are not read off the sweep.
        #[arg(long)]
        all_criteria: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(criteria) => {
            for c in &criteria {
                println!("{c}");
            }
            if criteria.iter().all(|c| c.pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CRITERION)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Vec<Criterion>, Box<dyn std::error::Error>> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::load(config)?;
            let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
            run_single(&cfg, &out, cli.seed)
        }
        Command::Sweep { config, all_criteria } => {
            let cfg = RunConfig::load(config)?;
            let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
            run_sweep(&cfg, &out, cli.jobs, cli.seed, *all_criteria)
        }
    }
}

/// Copy of the resolved configuration next to the artifacts.
fn write_resolved(cfg: &RunConfig, out: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    write_atomic(&out.join("config.toml"), cfg.to_toml().as_bytes()).map_err(std::io::Error::other)
}

fn run_single(cfg: &RunConfig, out: &Path, seed: Option<u64>) -> Result<Vec<Criterion>, Box<dyn std::error::Error>> {
    write_resolved(cfg, out)?;
    let spec = cfg.sweep();
    let eps = cfg.run_eps();
    let family = cfg.family(seed);
    let mut manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        eps,
        problem: spec.problem.clone(),
        params: spec.params::<f64>(eps).ok(),
        config: spec.solver.config(spec.problem.t_final),
        initial_energy: None,
        final_energy: None,
        dissipation: None,
        steps: 0,
        snapshots: 0,
        criteria: vec![],
        files: vec![],
        status: RunStatus::Pass,
    };
    match single_report(&spec, eps, &family) {
        Ok((traj, report)) => {
            write_csv(&out.join("trajectory.csv"), &trajectory_rows(&traj))?;
            write_csv(&out.join("report.csv"), &report_rows(&report))?;
            manifest.initial_energy = Some(traj.initial_energy);
            manifest.final_energy = traj.energies.last().copied();
            manifest.dissipation = Some(traj.final_dissipation());
            manifest.steps = traj.steps;
            manifest.snapshots = traj.snapshots.len();
            manifest.status = status_of(&report.criteria);
            manifest.criteria = report.criteria.clone();
            manifest.files = ["config.toml", "trajectory.csv", "report.csv", "manifest.json"].map(String::from).to_vec();
            write_json(&out.join("manifest.json"), &manifest)?;
            Ok(report.criteria)
        }
        Err(e) => {
            manifest.status = RunStatus::Error { message: e.to_string() };
            manifest.files = vec!["config.toml".into(), "manifest.json".into()];
            // best effort: the run error is what gets reported
            let _ = write_json(&out.join("manifest.json"), &manifest);
            Err(e.into())
        }
    }
}

fn run_sweep(
    cfg: &RunConfig,
    out: &Path,
    jobs: Option<usize>,
    seed: Option<u64>,
    all: bool,
) -> Result<Vec<Criterion>, Box<dyn std::error::Error>> {
    write_resolved(cfg, out)?;
    let spec = cfg.sweep();
    let mut report = sweep_report(&spec, &cfg.family(seed), jobs)?;
    if all {
        report.criteria = all_criteria(&spec, &report, seed.unwrap_or(cfg.tests.seed));
    }
    write_sweep_artifacts(&report, out)?;
    Ok(report.criteria)
}

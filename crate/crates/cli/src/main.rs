use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use shergo_core::harness::{run_experiment, Experiment, RunConfig};

#[derive(Parser)]
#[command(
    name = "shergo",
    version,
    about = "Stochastic Swift-Hohenberg experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy certificates and mode thresholds.
    Certify(Common),
    /// Ensemble run with energy-bound checks.
    Simulate(Common),
    /// High-mode contraction along a shared low-mode path.
    Slave(Common),
    /// Binding coupling ensemble and coupled-set frequencies.
    Couple(Common),
    /// Distance decay between two ensembles.
    Ergodicity(Common),
    /// Kernel inequality battery and mollifier tables.
    Kernels(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> anyhow::Result<Option<bool>> {
    let (experiment, common) = match cli.command {
        Command::Certify(c) => (Experiment::Certify, c),
        Command::Simulate(c) => (Experiment::Simulate, c),
        Command::Slave(c) => (Experiment::Slave, c),
        Command::Couple(c) => (Experiment::Couple, c),
        Command::Ergodicity(c) => (Experiment::Ergodicity, c),
        Command::Kernels(c) => (Experiment::Kernels, c),
    };
    let mut cfg = RunConfig::from_path(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    if cfg.experiment != experiment {
        bail!(
            "{} describes experiment {:?}, not {:?}",
            common.config.display(),
            cfg.experiment,
            experiment
        );
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = common.out {
        cfg.output_dir = out;
    }
    if common.workers == Some(0) {
        bail!("--workers must be positive");
    }
    let outcome = run_experiment(&cfg, common.workers)?;
    println!("{}", serde_json::to_string_pretty(&outcome.report)?);
    let verdict = match outcome.pass {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "REPORT",
    };
    eprintln!(
        "{verdict}: {} files in {}",
        outcome.manifest.files.len(),
        cfg.output_dir.display()
    );
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Some(false)) => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

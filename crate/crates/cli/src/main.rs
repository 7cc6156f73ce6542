//! `spinkrylov <experiment> --config <file> [--set key=value ...] [--out <dir>]`

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde_json::json;

use config::RunConfig;
use output::{write_run, Metadata};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] spinkrylov::Error),
    #[error("{0}")]
    Tolerance(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(_) => "computation",
            CliError::Tolerance(_) => "tolerance",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Core(_) => 4,
            CliError::Tolerance(_) => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Experiment {
    Spectrum,
    Evolve,
    Lanczos,
    Witten,
    Scars,
    Fermion,
    Sweep,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Evolve => "evolve",
            Experiment::Lanczos => "lanczos",
            Experiment::Witten => "witten",
            Experiment::Scars => "scars",
            Experiment::Fermion => "fermion",
            Experiment::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "spinkrylov", version, about = "Exact numerics for XX/XXZ spin lattices")]
struct Cli {
    experiment: Experiment,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override a configuration key, e.g. `--set lattice.nx=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides the `out` key).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn threads(cfg: &RunConfig) -> Result<usize, CliError> {
    match std::env::var("SPINKRYLOV_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("SPINKRYLOV_THREADS must be a non-negative integer, got {v:?}"))),
        Err(_) => Ok(cfg.threads),
    }
}

fn run(cli: &Cli) -> Result<PathBuf, (CliError, Option<PathBuf>)> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| (CliError::Io(format!("{}: {e}", cli.config.display())), cli.out.clone()))?;
    let mut cfg = RunConfig::load(&text, &cli.overrides).map_err(|e| (e, cli.out.clone()))?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out));
    let fail = |e: CliError| (e, Some(dir.clone()));
    cfg.threads = threads(&cfg).map_err(fail)?;
    spinkrylov::init_threads(cfg.threads).map_err(|e| fail(e.into()))?;

    let t0 = Instant::now();
    let result = match cli.experiment {
        Experiment::Spectrum => commands::spectrum(&cfg),
        Experiment::Evolve => commands::evolve(&cfg),
        Experiment::Lanczos => commands::lanczos(&cfg),
        Experiment::Witten => commands::witten(&cfg),
        Experiment::Scars => commands::scars(&cfg),
        Experiment::Fermion => commands::fermion(&cfg),
        Experiment::Sweep => commands::sweep(&cfg),
    };
    let out = result.map_err(fail)?;
    let meta = Metadata {
        subcommand: cli.experiment.name(),
        config: serde_json::to_value(&cfg).expect("config serializes"),
        threads: cfg.threads,
        wall_time: t0.elapsed().as_secs_f64(),
    };
    let summary = write_run(&dir, &out, &meta).map_err(fail)?;
    match out.failure {
        Some(msg) => Err(fail(CliError::Tolerance(msg))),
        None => Ok(summary),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{}", summary.display());
            ExitCode::SUCCESS
        }
        Err((err, dir)) => {
            let record = json!({
                "error": {
                    "kind": err.kind(),
                    "subcommand": cli.experiment.name(),
                    "message": err.to_string(),
                }
            });
            let text = serde_json::to_string(&record).expect("error record is valid JSON");
            eprintln!("{text}");
            if let Some(dir) = dir {
                if std::fs::create_dir_all(&dir).is_ok() {
                    let _ = std::fs::write(dir.join("error.json"), text + "\n");
                }
            }
            ExitCode::from(err.exit_code())
        }
    }
}

//! `superrep` — batch experiment runner for the super-replication lab.
//!
//! Usage: `superrep <experiment> [--config <file>] [--set key=value ...]
//! [--out <dir>]`. Configuration comes from one JSON document; `--set`
//! flags override individual fields and mirror field names exactly. The
//! default output directory may also come from `SUPERREP_OUT`.
//!
//! Exit codes: 0 on success, 1 when an enabled assertion fails, 2 on
//! usage errors.

mod config;
mod experiments;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::RawConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(String),
}

#[derive(Parser)]
#[command(
    name = "superrep",
    about = "Super-replication pricing lab: duality gaps, polar cones, entropy, passage times",
    disable_help_subcommand = true
)]
struct Cli {
    /// Experiment: dyadic-gap | entropy-check | finite-duality | passage-law | mc-pair
    experiment: String,

    /// JSON configuration file
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a config field, e.g. --set n=1000 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output directory (default: $SUPERREP_OUT or ./out)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if !experiments::EXPERIMENTS.contains(&cli.experiment.as_str()) {
        return Err(CliError::Usage(format!(
            "unknown experiment {:?}; expected one of {:?}",
            cli.experiment,
            experiments::EXPERIMENTS
        )));
    }
    let mut cfg = RawConfig::load(cli.config.as_deref(), &cli.set)?;
    if let Some(named) = cfg.config_experiment()? {
        if named != cli.experiment {
            return Err(CliError::Usage(format!(
                "config names experiment {named:?} but {:?} was requested",
                cli.experiment
            )));
        }
    }
    let out_dir = cli
        .out
        .or_else(|| std::env::var_os("SUPERREP_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    experiments::run(&cli.experiment, &mut cfg, &out_dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("superrep: one or more checks failed (see manifest.json)");
            ExitCode::from(1)
        }
        Err(CliError::Run(msg)) => {
            eprintln!("superrep: run failed: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("superrep: {msg}");
            ExitCode::from(2)
        }
    }
}

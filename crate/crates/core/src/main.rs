use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use nrlimit::sweep::{
    emit, evaluate, run_extension_check, run_oracle_check, run_single, run_sweep, RunConfig,
};

/// Ground states of the pseudo-relativistic NLS and their nonrelativistic limit.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single light speed (`inf` for the limit problem).
    Solve {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the c-sweep and write CSV/JSON reports and snapshots.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the half-space extension identities mode by mode.
    ExtensionCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the spectral limit state with the radial shooting oracle.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { c, config } => {
            let cfg = load(config.as_deref())?;
            let (_, summary) = run_single(&cfg, c, &cfg.output.dir)?;
            print_json(&summary)?;
            Ok(summary.checks.all())
        }
        Command::Sweep { config } => {
            let cfg = load(Some(&config))?;
            let sweep = run_sweep(&cfg)?;
            let checks = evaluate(&sweep, &cfg)?;
            emit(&sweep, &checks, &cfg.output.dir)?;
            print_json(&checks)?;
            log::info!("reports written to {}", cfg.output.dir.display());
            Ok(checks.passed)
        }
        Command::ExtensionCheck { config } => {
            let cfg = load(Some(&config))?;
            let summaries = run_extension_check(&cfg, &cfg.output.dir)?;
            print_json(&summaries)?;
            Ok(summaries.iter().all(|s| s.passed))
        }
        Command::Oracle { config } => {
            let cfg = load(Some(&config))?;
            let summary = run_oracle_check(&cfg, &cfg.output.dir)?;
            print_json(&summary)?;
            Ok(summary.passed)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            log::error!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(2)
        }
    }
}

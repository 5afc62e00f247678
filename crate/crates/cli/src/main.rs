//! `fracground`: batch front end for ground-state solves, coupling sweeps,
//! constant estimation and the invariant suite.

mod artifacts;
mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Outcome;
use config::{Flags, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "fracground",
    version,
    about = "Normalized ground states of a fractional NLS"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Computes one ground state and writes report, history, field and profile plot.
    Solve,
    /// Solves over a coupling list and fits the log-log slope of the level.
    Sweep,
    /// Estimates the Sobolev and Gagliardo-Nirenberg constants on the grid.
    Constants,
    /// Runs the invariant suite and prints a pass/fail table.
    Verify,
    /// Regenerates SVG plots from the CSV and JSON tables in a directory.
    Plot {
        /// Directory holding `profile.csv` and/or `sweep.csv` + `slope.json`.
        input: PathBuf,
    },
}

/// Caps the global pool at `FRAC_NLSE_THREADS` when set.
fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("FRAC_NLSE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("FRAC_NLSE_THREADS must be a positive integer, got {raw:?}"))?;
    if threads == 0 {
        anyhow::bail!("FRAC_NLSE_THREADS must be a positive integer, got 0");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    configure_threads()?;
    let mut flags = cli.flags;
    if let Command::Plot { input } = &cli.command {
        flags.out.get_or_insert_with(|| input.clone());
    }
    let cfg = RunConfig::resolve(&flags)?;
    match &cli.command {
        Command::Solve => {
            if cfg.etas.len() > 1 {
                anyhow::bail!("solve takes a single --eta value");
            }
            commands::solve(&cfg)
        }
        Command::Sweep => commands::sweep(&cfg),
        Command::Constants => commands::constants(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Plot { input } => commands::plot(&cfg, input),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Incomplete) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

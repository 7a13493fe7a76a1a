//! `htq`: simulate, verify and scan heavy-traffic queueing experiments.

mod commands;
mod config;
mod report;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::LimitArgs;
use crate::config::{ConfigError, Experiment, RunArgs};

#[derive(Parser)]
#[command(
    name = "htq",
    version,
    about = "Heavy-traffic experiments for the switch, three-queue and N-system models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate stationary ensembles and write them as CSV + JSON metadata.
    Simulate(RunArgs),
    /// Run the exact identities, collapse moments, residuals and limit comparison.
    Verify(RunArgs),
    /// Draw samples from a heavy-traffic limit law.
    LimitSample(LimitArgs),
    /// Empirical functional-equation residuals over a frequency grid and ε sweep.
    ResidualGrid(RunArgs),
    /// Collapse moments across an ε sweep.
    SscScan(RunArgs),
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(&Experiment::from_args(&a)?),
        Command::Verify(a) => commands::verify(&Experiment::from_args(&a)?),
        Command::LimitSample(a) => commands::limit_sample(&a),
        Command::ResidualGrid(a) => commands::residual_grid(&Experiment::from_args(&a)?),
        Command::SscScan(a) => commands::ssc_scan(&Experiment::from_args(&a)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is::<ConfigError>() => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

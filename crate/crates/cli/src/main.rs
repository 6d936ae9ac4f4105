//! `pu-risklab`: batch driver for the PU-learning risk laboratory.
//!
//! Exit codes: 0 on success, 1 when `validate` finds a failing invariant,
//! 2 on any flag, config or parameter error.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CliError, Flags, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "pu-risklab", version, about = "Risk estimation and ERM under selected-at-random PU labeling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Run every invariant suite; exits 1 if any check fails.
    Validate,
    /// Exact and empirical risks of reference classifiers on one sample.
    Risk,
    /// Empirical risk minimisation on fresh samples.
    Erm,
    /// Closed-form upper and lower bounds.
    Bounds,
    /// Mean ERM excess risk along a grid of n, h or e_m.
    Curve,
    /// Worst case over the Assouad family against both bounds.
    Minimax,
    /// Nontraditional versus SAR ERM when the Cannings condition holds or fails.
    Cannings,
}

fn run(command: Command, cfg: &RunConfig) -> config::CliResult<()> {
    match command {
        Command::Validate => commands::validate(cfg),
        Command::Risk => commands::risk(cfg),
        Command::Erm => commands::erm_cmd(cfg),
        Command::Bounds => commands::bounds(cfg),
        Command::Curve => commands::curve(cfg),
        Command::Minimax => commands::minimax(cfg),
        Command::Cannings => commands::cannings(cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = RunConfig::resolve(cli.flags).and_then(|cfg| run(cli.command, &cfg));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pu-risklab: {e}");
            match e {
                CliError::Failed(_) => ExitCode::from(1),
                CliError::Config(_) => ExitCode::from(2),
            }
        }
    }
}

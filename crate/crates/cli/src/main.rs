//! `gperim`: reproducible Gaussian-perimeter experiments on truncated
//! Wiener spaces. One experiment per invocation; outputs embed the full
//! resolved configuration, and identical configurations yield byte-identical
//! files at any thread count.

mod cmd;
mod config;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "gperim",
    version,
    about = "Gaussian perimeters of convex sublevel sets: profiles, coarea checks, the diverging box family, concavity probes, and an invariant gate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Perimeter profile over a radius grid, with thresholds and verdicts
    Profile(cmd::profile::Args),
    /// Both sides of the coarea identity for one shape
    Coarea(cmd::coarea::Args),
    /// The box family: thresholds, measures, perimeters, bounds, limits
    Cube(cmd::cube::Args),
    /// Log-concavity of dilation measures, plus boundary-mass decay
    Convexity(cmd::convexity::Args),
    /// Run the invariant suite; nonzero exit on any failure
    Validate(cmd::validate::Args),
}

/// Exit codes: 2 config/input, 3 failed invariant, 4 numerical failure.
#[derive(Debug)]
pub(crate) enum CliError {
    Config(String),
    Io(String),
    Core(gperim_core::Error),
    Checks(String),
}

impl CliError {
    fn code(&self) -> u8 {
        use gperim_core::Error::*;
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Checks(_) => 3,
            CliError::Core(e) => match e {
                InvalidSpectrum(_) | InvalidShape(_) | DimensionMismatch { .. }
                | InvalidGrid(_) | TooFewSamples { .. } | NotABall => 2,
                _ => 4,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Io(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Checks(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<gperim_core::Error> for CliError {
    fn from(e: gperim_core::Error) -> Self {
        CliError::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cmd::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gperim: {e}");
            ExitCode::from(e.code())
        }
    }
}

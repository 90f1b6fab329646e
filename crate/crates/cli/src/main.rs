//! Command-line driver for the harmonic transport simulator.
//!
//! Subcommands cover the full workflow: `synth` writes the control waveforms,
//! `classical` and `evolve` run the trajectory and wavefunction solvers,
//! `fidelity` and `report` score transport quality, `sweep` scans a parameter.
//! Every run resolves its configuration to `resolved.conf`, stamps each data
//! file with the config hash and seed, and is byte-reproducible.

mod commands;
mod config;
mod output;
mod scenario;

use clap::{Args, Parser, Subcommand};
use shuttlesim::SimError;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical guard tripped: {0}")]
    Numeric(#[from] SimError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "shuttlesim",
    version,
    about = "Harmonic-well transport: waveform synthesis, solvers, and fidelity reports"
)]
struct Cli {
    #[command(flatten)]
    overrides: config::Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the control waveforms for every selected model to controls.csv
    Synth,
    /// Integrate classical trajectories and write comoving phase-space curves
    Classical,
    /// Evolve the initial state and write probability-density snapshots
    Evolve,
    /// Write the instantaneous-fidelity trace and a final report per model
    Fidelity,
    /// Scan one parameter and tabulate final fidelity per model
    Sweep(SweepArgs),
    /// Compute the full metric battery per model without curve output
    Report,
}

#[derive(Args)]
struct SweepArgs {
    /// Parameter to scan: duration, alpha, steps, or fourier_period
    #[arg(long)]
    parameter: String,
    /// Range start (accepts multiples of pi such as 2pi for durations)
    #[arg(long)]
    from: Option<String>,
    /// Range end, inclusive
    #[arg(long)]
    to: Option<String>,
    /// Number of evenly spaced range points
    #[arg(long)]
    points: Option<usize>,
    /// Explicit comma-separated list of values, replaces from/to/points
    #[arg(long)]
    values: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli) {
        Ok(label) => {
            eprintln!("{label} finished in {:.2} s", started.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: &Cli) -> CliResult<&'static str> {
    let resolved = config::resolve(&cli.overrides)?;
    match &cli.command {
        Command::Synth => commands::synth(&resolved).map(|()| "synth"),
        Command::Classical => commands::classical(&resolved).map(|()| "classical"),
        Command::Evolve => commands::evolve(&resolved).map(|()| "evolve"),
        Command::Fidelity => commands::fidelity(&resolved).map(|()| "fidelity"),
        Command::Sweep(args) => commands::sweep(&resolved, args).map(|()| "sweep"),
        Command::Report => commands::report(&resolved).map(|()| "report"),
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;

use commands::Invocation;
use error::CliError;

/// Fluid model and simulator for the overloaded multiclass FIFO queue with
/// abandonment.
#[derive(Parser)]
#[command(name = "fluidq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed (overrides FLUIDQ_SEED and `sim.seed`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the fluid model: workload.csv, functionals.csv, band.json.
    Fluid(Common),
    /// Simulate one sample path: jobs.csv, workload.csv, snapshots.csv.
    Simulate(Common),
    /// Compare scaled simulations with the fluid model: report.csv, summary.json.
    Converge(Common),
    /// Evaluate the invariant state at workload `w`: invariant.csv.
    Invariant {
        #[command(flatten)]
        common: Common,
        /// Workload level in the equilibrium band (default: its lower end).
        #[arg(long)]
        w: Option<f64>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let open = |c: Common| Invocation::new(&c.config, c.out, c.seed);
    match cli.command {
        Command::Fluid(c) => commands::fluid(&open(c)?),
        Command::Simulate(c) => commands::simulate(&open(c)?),
        Command::Converge(c) => commands::converge(&open(c)?),
        Command::Invariant { common, w } => commands::invariant(&open(common)?, w),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fluidq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

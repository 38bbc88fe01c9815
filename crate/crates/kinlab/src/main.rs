//! `kinlab` binary: every subcommand reads one JSON config and writes its
//! artifacts plus a `report.json` into the output directory.
//!
//! Exit codes: 0 success (all attached checks pass), 2 config error,
//! 3 a check failed, 4 numeric or I/O failure.

use clap::{Args, Parser, Subcommand};
use kinlab::runner::{self, Invocation};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "kinlab", version, about = "Label-switching kinetic system toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample particle trajectories of the switching system
    Simulate(CommonArgs),
    /// Solve the kinetic or gradient-flow equation on a grid
    Pde(CommonArgs),
    /// Compute a stationary state (closed form or viscosity eigensolver)
    Stationary(CommonArgs),
    /// Tabulate one of the decay and stability estimates
    Bounds(CommonArgs),
    /// Run a preconfigured experiment with its attached checks
    Experiment(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed override; wins over the config file
    #[arg(long)]
    seed: Option<u64>,
    /// Validate the config, print it resolved, and exit without running
    #[arg(long)]
    dry_run: bool,
}

fn main() {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Pde(a) => ("pde", a),
        Command::Stationary(a) => ("stationary", a),
        Command::Bounds(a) => ("bounds", a),
        Command::Experiment(a) => ("experiment", a),
    };
    let inv = Invocation {
        command,
        config_path: &args.config,
        out_root: &args.out,
        seed: args.seed,
        dry_run: args.dry_run,
    };
    if let Err(e) = runner::run(&inv) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}

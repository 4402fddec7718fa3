use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod failure;
mod output;
mod plot;

#[derive(Parser)]
#[command(name = "nof1", version, about = "Simulate and analyze N-of-1 crossover trials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw trajectories from a structural model and write panel CSVs.
    Simulate(Args),
    /// Mean difference, interval and Welch t-test for one panel.
    Estimate(Args),
    /// Per-time g-formula effects, optionally with bootstrap bands.
    Gformula(Args),
    /// Stationarity and constant-noise checks for one panel.
    Diagnose(Args),
    /// Population effects from a manifest of individual panels.
    Aggregate(Args),
    /// Run the acceptance criteria and print PASS/FAIL/SKIP.
    Validate(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML configuration; relative paths inside resolve against its directory.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Estimate(a) => ("estimate", a),
        Command::Gformula(a) => ("gformula", a),
        Command::Diagnose(a) => ("diagnose", a),
        Command::Aggregate(a) => ("aggregate", a),
        Command::Validate(a) => ("validate", a),
    };
    match commands::run(name, &args.config, args.seed, &args.out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {name}: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

//! Command-line front end: machine-readable series for every headline
//! number the library computes. Exit code 0 on success, 2 on invalid
//! input, 3 when a computed residual misses its tolerance.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use output::Format;

#[derive(Parser)]
#[command(name = "fockdual", version, about = "Two-mode interference and amplifier duality toolkit")]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coincidence probabilities across a coupler parameter range
    DipScan(commands::DipScanArgs),
    /// Photon-pair number distribution behind a seeded amplifier
    PairDist(commands::PairDistArgs),
    /// Element-wise duality residual sweep, or the single-photon table
    DualityCheck(commands::DualityCheckArgs),
    /// Simulate a heralded amplifier run from a TOML config
    Experiment(commands::ExperimentArgs),
    /// Compare forward-Bayes and reversed-picture inference tables
    RetroCheck(commands::RetroCheckArgs),
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let outcome = match &cli.command {
        Command::DipScan(args) => commands::dip_scan(args)?,
        Command::PairDist(args) => commands::pair_dist(args)?,
        Command::DualityCheck(args) => commands::duality_check(args)?,
        Command::Experiment(args) => commands::experiment(args)?,
        Command::RetroCheck(args) => commands::retro_check(args)?,
    };
    let rendered = outcome
        .record
        .render(cli.format)
        .map_err(CliError::Validation)?;
    print!("{rendered}");
    if let Some(msg) = outcome.tolerance_failure {
        eprintln!("error: {msg}");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Tolerance(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

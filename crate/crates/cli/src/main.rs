//! `sandpile`: simulation, analysis, intervention and verification commands.

mod cmd;
mod error;
mod input;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "sandpile", version, about = "Abelian sandpile on the wired square lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the random-drop chain and write its trajectory.
    Simulate(cmd::simulate::SimulateArgs),
    /// Exact expected avalanche size and depth of each generator.
    Analyze(cmd::analyze::AnalyzeArgs),
    /// Effect of emptying each generator vertex; stability level and cornerstones.
    Intervene(cmd::intervene::InterveneArgs),
    /// Compare the square closed forms with the algorithms.
    VerifySquare(cmd::verify::VerifyArgs),
}

/// Caps the global rayon pool at `SANDPILE_THREADS` when set.
fn configure_threads() -> CliResult {
    let Ok(raw) = std::env::var("SANDPILE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("SANDPILE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Simulate(a) => cmd::simulate::run_cmd(a),
        Command::Analyze(a) => cmd::analyze::run_cmd(a),
        Command::Intervene(a) => cmd::intervene::run_cmd(a),
        Command::VerifySquare(a) => cmd::verify::run_cmd(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sandpile: {e}");
            e.exit_code()
        }
    }
}

//! byzlearn command line: scenario execution, graph checking, seed sweeps,
//! and report generation.
//!
//! Exit codes: 0 success, 1 runtime error, 2 assumption-check failure
//! without `--force` (and clap usage errors). Log verbosity comes from the
//! `BYZLEARN_LOG` environment variable (error, warn, info, debug).

mod check_graph;
mod report;
mod run;
mod sweep;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "byzlearn",
    about = "Byzantine fault-tolerant non-Bayesian learning: simulation and network checking",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace and summary.
    Run(run::RunArgs),
    /// Check the unique-source condition (and identifiability, given a
    /// model) for a graph and fault budget.
    CheckGraph(check_graph::CheckGraphArgs),
    /// Run a scenario across many seeds and aggregate the outcomes.
    Sweep(sweep::SweepArgs),
    /// Summarize a trace file: decisions, diameters, decay fits.
    Report(report::ReportArgs),
}

/// Outcome of a subcommand that distinguishes gate failures from runtime
/// errors.
pub(crate) enum Outcome {
    Success,
    /// A check failed in a way that is a result, not a malfunction
    /// (assumption gate without --force, or a failed graph check).
    CheckFailed,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BYZLEARN_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run::execute(args),
        Command::CheckGraph(args) => check_graph::execute(args),
        Command::Sweep(args) => sweep::execute(args),
        Command::Report(args) => report::execute(args),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

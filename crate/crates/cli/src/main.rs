//! `tfwlab`: solve generalized TFW and TF atoms, sweep the excess-charge
//! bound and verify solutions against the analytic inequalities.
//!
//! Exit status: 0 success, 1 usage or invalid input, 2 numerical failure,
//! 3 verification failure.

mod commands;
mod config;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tfwlab::Error;

use config::Flags;

#[derive(Parser)]
#[command(name = "tfwlab", version, about = "Generalized Thomas-Fermi-Weizsaecker atoms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one atom and write its profiles (`--model tfw|tf`).
    Solve,
    /// Compute the bound B(p) over a sweep of p.
    BoundCurve,
    /// Run the verification checks on a solved or saved atom.
    Verify,
    /// Sweep gamma at p = 3/2 and compare Q with the critical bound.
    Critical,
}

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Verification(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) | Failure::Verification(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidParameter(_) | Error::GridMismatch(_) | Error::Io(_) | Error::Parse(_) => {
                Failure::Usage(msg)
            }
            Error::GridTooSmall { .. }
            | Error::NonConvergence { .. }
            | Error::OptimizerFailure(_)
            | Error::BoundaryMatchFailure(_) => Failure::Numerical(msg),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = cli.flags.resolve()?;
    if let Some(jobs) = cfg.flags.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot start {jobs} workers: {e}")))?;
    }
    match cli.command {
        Command::Solve => commands::solve(&cfg),
        Command::BoundCurve => commands::bound_curve_cmd(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Critical => commands::critical(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

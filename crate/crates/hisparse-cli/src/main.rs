//! Command-line front end: parameter sweeps, sample-complexity bounds,
//! restricted isometry estimation, oracle self-checks and a single-instance
//! demo.
//!
//! Exit codes: 0 success, 1 property violation (oracle-check), 2 unreadable
//! config file, 3 invalid parameters. Stdout carries human-readable text;
//! machine formats (CSV, JSON) go to files.

mod demo;
mod oracle;
mod ripbound;
mod sweep;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "hisparse",
    version,
    about = "Hierarchically sparse recovery toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a reconstruction sweep from a JSON config, writing CSV results
    /// and a config sidecar.
    Sweep(sweep::SweepArgs),
    /// Print Gaussian sample-complexity bounds for hierarchical and
    /// unstructured sparsity side by side.
    RipBound(ripbound::RipBoundArgs),
    /// Estimate the restricted isometry constant of a generated operator.
    RipEstimate(ripbound::RipEstimateArgs),
    /// Run the threshold-vs-oracle and restricted-isometry property suites
    /// at small scale.
    OracleCheck(oracle::OracleArgs),
    /// Reconstruct one synthetic instance and report both solvers.
    Demo(demo::DemoArgs),
}

/// Error carrying its process exit code.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    pub fn unreadable(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<hisparse::Error> for CliError {
    fn from(e: hisparse::Error) -> Self {
        CliError::invalid(e.to_string())
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("HISPARSE_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: HISPARSE_THREADS must be a positive integer, got {threads:?}");
                return ExitCode::from(3);
            }
        }
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep(args) => sweep::run(args),
        Command::RipBound(args) => ripbound::run_bound(args),
        Command::RipEstimate(args) => ripbound::run_estimate(args),
        Command::OracleCheck(args) => oracle::run(args),
        Command::Demo(args) => demo::run(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

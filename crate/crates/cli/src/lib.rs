//! Command-line front end: CSV and config ingestion, experiment
//! orchestration and deterministic reports.

mod commands;
pub mod config;
pub mod format;
pub mod ingest;
mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use ingest::{ingest_csv, IngestError};
pub use report::Report;

#[derive(Debug, Parser)]
#[command(name = "rdd", version, about = "Sharp regression discontinuity inference and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bias-corrected test of H0: theta = theta0 on a CSV with columns y, z.
    Test(RunArgs),
    /// Size and power study over the DGPs of a config file.
    Simulate(RunArgs),
    /// Splice a null DGP into an alternative on shrinking windows.
    Adversarial(RunArgs),
    /// Certify the smoothness and boundedness conditions of each DGP.
    CheckDgp(RunArgs),
    /// Bias and variance of the estimator against population predictions.
    Diagnose(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Test(_) => "test",
            Command::Simulate(_) => "simulate",
            Command::Adversarial(_) => "adversarial",
            Command::CheckDgp(_) => "check-dgp",
            Command::Diagnose(_) => "diagnose",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Test(a)
            | Command::Simulate(a)
            | Command::Adversarial(a)
            | Command::CheckDgp(a)
            | Command::Diagnose(a) => a,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// CSV data for `test`; the TOML config for every other subcommand.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub theta0: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Bandwidth scale c in h = c n^(-r); default sd(Z).
    #[arg(long)]
    pub bandwidth_c: Option<f64>,
    /// Bandwidth rate r in h = c n^(-r); default 0.2.
    #[arg(long)]
    pub bandwidth_r: Option<f64>,
    /// Fixed bandwidth, instead of the rate rule.
    #[arg(long)]
    pub bandwidth_fixed: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "RDD_WORKERS")]
    pub workers: Option<usize>,
    /// Directory for report.txt and the CSV tables.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error ({kind}): {source}", kind = .source.name())]
    Input {
        #[from]
        source: IngestError,
    },
    #[error("estimator error ({kind}): {source}", kind = .source.name())]
    Estimator {
        #[from]
        source: rdd_core::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Estimator { .. } => 2,
            CliError::Config(_) | CliError::Input { .. } => 3,
        }
    }
}

/// Runs one subcommand and returns its report.
pub fn run(command: &Command) -> Result<Report, CliError> {
    commands::dispatch(command)
}

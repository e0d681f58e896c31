//! `satact` command-line front end.
//!
//! Exit codes: 0 success, 1 quantitative failure (gradient-check breach or
//! training divergence), 2 usage, configuration or file error.

use std::ffi::OsString;
use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod format;

/// Failure classes that map onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1.
    Failure(String),
    /// Exit 2.
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Failure(m) | CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<satact::Error> for CliError {
    fn from(e: satact::Error) -> Self {
        match e {
            satact::Error::NonFiniteValue { .. } => CliError::Failure(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "satact", version, about = "Saturated activation functions: curves, checks, benchmarks, training")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate f, f' and the pass rate on a uniform grid (CSV).
    Curve(commands::curve::Args),
    /// Compare network gradients against central differences.
    Gradcheck(commands::gradcheck::Args),
    /// Time forward and derivative evaluation per element.
    Bench(commands::bench::Args),
    /// Train one model from a key=value config file.
    Train(commands::train::Args),
    /// Train the same initial model once per activation and tabulate results.
    Compare(commands::compare::Args),
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Curve(a) => commands::curve::run(a),
        Command::Gradcheck(a) => commands::gradcheck::run(a),
        Command::Bench(a) => commands::bench::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Compare(a) => commands::compare::run(a),
    }
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Command-line front end of `nlswave`: Black-Scholes surfaces, synthetic
//! model surfaces, calibration, PDE verification and Greeks.

pub mod args;
pub mod calibrate;
pub mod commands;
pub mod config;
pub mod error;
pub mod surface_io;

use std::ffi::OsString;

use clap::Parser;

pub use error::{CliError, CliResult};

/// Parses `argv` (config file entries included) into a command line.
pub fn parse(argv: Vec<OsString>) -> Result<args::Cli, CliError> {
    let argv = config::expand_config(argv)?;
    args::Cli::try_parse_from(argv).map_err(CliError::from)
}

/// Runs a parsed command, returning the one-line summary to print.
pub fn execute(cli: &args::Cli) -> CliResult<String> {
    use args::Command;
    match &cli.command {
        Command::Generate(a) => commands::run_generate(a),
        Command::Sample(a) => commands::run_sample(a),
        Command::Fit(a) => commands::run_fit(a),
        Command::Verify(a) => commands::run_verify(a),
        Command::Greeks(a) => commands::run_greeks(a),
    }
}

/// `parse` then `execute`.
pub fn run<I, T>(argv: I) -> CliResult<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    execute(&parse(argv.into_iter().map(Into::into).collect())?)
}

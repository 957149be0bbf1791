//! Command-line companion of `breedsim-core`: TOML run configuration,
//! CSV artifacts with readers, run manifests and the `breedsim` binary.

use std::io::Write;

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use manifest::RunManifest;

/// Runs a parsed command line, printing the report; returns the exit code.
pub fn execute(cli: &cli::Cli) -> i32 {
    match commands::run(&cli.command) {
        Ok(report) => {
            // A closed pipe (e.g. `| head`) is not a failure of the run.
            let mut out = std::io::stdout().lock();
            for line in report {
                if writeln!(out, "{line}").is_err() {
                    break;
                }
            }
            error::exit::OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;

use breedsim::cli::Cli;
use breedsim::error::exit;
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code =
        panic::catch_unwind(AssertUnwindSafe(|| breedsim::execute(&cli))).unwrap_or(exit::INTERNAL);
    ExitCode::from(code as u8)
}

use std::process::ExitCode;

use clap::Parser;
use isoquant::cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("isoquant: {e:#}");
            ExitCode::FAILURE
        }
    }
}

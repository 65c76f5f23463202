//! `qperiods`: runs the deformation and period pipeline on a model and
//! prints the results as JSON or CSV.

use std::process::ExitCode;

use clap::Parser;
use qperiods_cli::{execute, Cli};

fn main() -> ExitCode {
    match execute(&Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

use std::process::ExitCode;

use clap::Parser;
use kernel_duality::cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kernel-duality: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

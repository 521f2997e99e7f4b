use std::process::ExitCode;

use clap::Parser;
use dirac_asym::cli::{configure_threads, emit, exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| run(cli)).and_then(|outcome| {
        emit(&outcome)?;
        Ok(outcome.exit_code)
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

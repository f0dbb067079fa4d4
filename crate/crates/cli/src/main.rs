use std::process::ExitCode;

use clap::Parser;
use fmin_cli::{configure_threads, execute, Cli, THREADS_VAR};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var(THREADS_VAR).ok();
    let result = configure_threads(threads.as_deref()).and_then(|_| execute(&cli));
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fmin: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

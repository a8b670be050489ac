use std::process::ExitCode;

use clap::Parser;
use evdesnow_cli::commands::{run, Cli};
use evdesnow_cli::configure_threads;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::process::ExitCode;

use clap::Parser;
use smoothcert_cli::args::Cli;
use smoothcert_cli::commands;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

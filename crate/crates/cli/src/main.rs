use std::process::ExitCode;

use clap::Parser;
use kgdm_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = kgdm_cli::check(&cli) {
        e.exit();
    }
    match kgdm_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

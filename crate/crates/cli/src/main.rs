mod args;
mod commands;
mod failure;
mod input;
mod json;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use failure::{EXIT_CONFIG, EXIT_INTERNAL};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let outcome = commands::threads().and_then(|_| match &cli.command {
        Command::Sample(a) => commands::sample(a),
        Command::Inclusion(a) => commands::inclusion(a),
        Command::Verify(a) => commands::verify(a),
        Command::Rate(a) => commands::rate(a),
    });
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(if (0..=255).contains(&failure.code) { failure.code as u8 } else { EXIT_INTERNAL as u8 })
        }
    }
}

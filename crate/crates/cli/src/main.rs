//! `frugal` command-line front end.
//!
//! Exit status: 0 on success, 1 on I/O failures, 2 on bad flags or a
//! malformed spec, 3 when `proptest` ran but a property failed.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use frugal_core::Error;

use crate::args::Cli;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::StreamSpec(_)
        | Error::QuantileSyntax(_)
        | Error::InvalidQuantile { .. }
        | Error::Json(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let mut cli = Cli::parse();
    let result = commands::apply_seed_env(&mut cli).and_then(|from_env| commands::dispatch(&cli, &argv, from_env));
    match result {
        Ok(outcome) if outcome.passed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(3),
        Err(e) => {
            eprintln!("frugal: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

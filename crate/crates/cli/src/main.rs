//! `toricsol`: command-line front end for the toric soliton library.

mod args;
mod commands;
mod error;
mod input;
mod output;
mod report;
mod solve;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(a) => commands::check(a),
        Command::Dual(a) => commands::dual(a),
        Command::SolitonVector(a) => commands::soliton_vector(a),
        Command::Guillemin(a) => commands::guillemin(a),
        Command::Solve(a) => solve::solve(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

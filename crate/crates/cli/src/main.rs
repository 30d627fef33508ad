//! `qzone` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation error, 3 solver or
//! backend failure.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::commands::SolverFailure;

const USAGE: u8 = 1;
const VALIDATION: u8 = 2;
const SOLVER: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<SolverFailure>() {
            return SOLVER;
        }
        if let Some(e) = cause.downcast_ref::<qzone::Error>() {
            return if e.is_solver_failure() { SOLVER } else { VALIDATION };
        }
    }
    VALIDATION
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

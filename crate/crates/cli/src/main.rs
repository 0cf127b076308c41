//! `rpca` command-line entry point.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 validation failure,
//! 4 numerical-quality failure.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use rpca::Error;

use args::{Cli, Command};

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 2,
        Error::Validation(_) | Error::Parse { .. } => 3,
        Error::Numerical(_) => 4,
        Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::GenModel(a) => commands::gen_model(a),
        Command::Evolve(a) => commands::evolve_cmd(a),
        Command::Orbits(a) => commands::orbits_cmd(a),
        Command::Spectrum(a) => commands::spectrum_cmd(a),
        Command::Blocks(a) => commands::blocks_cmd(a),
        Command::Dispersion(a) => commands::dispersion_cmd(a),
        Command::Coarse(a) => commands::coarse_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

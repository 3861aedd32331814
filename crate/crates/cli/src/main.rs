//! `gateslab`: dataset generation, predictor training and evaluation,
//! isomorphism audits and search experiments.
//!
//! Machine-readable results go to stdout, logs to stderr. Exit codes:
//! 0 success, 2 configuration error, 3 data error, 4 numeric failure.

mod args;
mod commands;
mod manifest;
mod oracle_stub;

use std::process::ExitCode;

use clap::Parser;
use gateslab::Error;

use args::{Cli, Command};

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Range(_) | Error::Unsupported(_) | Error::Space(_) => 2,
        Error::Numerics(_) | Error::Sort(_) | Error::Shape { .. } | Error::Trace(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let argv: Vec<String> = std::env::args().collect();
    let result = match &cli.command {
        Command::Gen(a) => commands::gen(a, &argv),
        Command::Train(a) => commands::train(a, &argv),
        Command::Eval(a) => commands::eval(a, &argv),
        Command::Isocheck(a) => commands::isocheck(a, &argv),
        Command::Search(a) => commands::search(a, &argv),
        Command::SweepR(a) => commands::sweep_r(a, &argv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

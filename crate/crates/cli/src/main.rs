//! `dynrecip` command-line interface.
//!
//! Exit codes: 0 success, 1 error (including usage errors), 2 a fit stopped
//! at the iteration limit without converging.

mod commands;
mod options;
mod output;

use std::process::ExitCode;

use clap::Parser;
use log::error;

use options::{Cli, Command};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        error!("{e}");
        return ExitCode::from(EXIT_ERROR);
    }

    let result = match cli.command {
        Command::Fit(args) => commands::fit(args, cli.config.as_deref()),
        Command::Generate(args) => commands::generate(args, cli.config.as_deref()),
        Command::Predict(args) => commands::predict(args, cli.config.as_deref()),
        Command::Cv(args) => commands::cv(args, cli.config.as_deref()),
        Command::Reciprocity(args) => commands::reciprocity(args, cli.config.as_deref()),
        Command::Benchmark(args) => commands::benchmark(args, cli.config.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

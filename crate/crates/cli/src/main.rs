//! `qphase` command-line front-end.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use qphase::exec::{set_jobs, Exec};
use qphase::Error;

use args::Cli;

/// 0 on success, 2 when the problem exceeds dense-method limits, 1 for
/// every other failure.
fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Resource(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let exec = match cli.jobs {
        Some(0) => {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(1);
        }
        Some(1) => Exec::Sequential,
        Some(n) => {
            set_jobs(n);
            Exec::Parallel
        }
        None => Exec::Parallel,
    };
    match commands::run(cli.command, exec) {
        Ok(manifest) => {
            log::info!("wrote {} files", manifest.outputs.len() + 1);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! `spectl`: command-line harness for optimal two-level transfer experiments.
//!
//! Exit codes: 0 success, 1 failed checks (`verify`), 2 configuration
//! error, 3 numerical failure. Logging goes to stderr; set `SPECTL_LOG`
//! (e.g. `info`, `debug`) to change the level.

mod cli;
mod commands;
mod config;
mod failure;
mod setup;

use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use crate::cli::{Cli, Command};
use crate::config::RunConfig;
use crate::failure::{Failure, Outcome};

fn execute(command: &Command) -> Outcome<i32> {
    let cfg = RunConfig::from_args(command.args()).map_err(Failure::Config)?;
    let emitted = match command {
        Command::Spectrum(_) => commands::spectrum(&cfg)?,
        Command::Verify(_) => commands::verify(&cfg)?,
        Command::Sweep(_) => commands::sweep(&cfg)?,
        Command::Run(_) => commands::run(&cfg)?,
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, &emitted.text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::Config)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(emitted.text.as_bytes())
                .and_then(|_| out.flush())
                .context("cannot write to stdout")
                .map_err(Failure::Config)?;
        }
    }
    Ok(emitted.exit_code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPECTL_LOG", "warn")).init();
    let cli = Cli::parse();
    let code = match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("spectl: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

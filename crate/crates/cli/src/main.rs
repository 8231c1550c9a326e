//! `jumpcode` command-line tool.

mod config;
mod error;
mod output;
mod run;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Flags, RunConfig};
use error::CliError;

fn run_cli(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.flags.config {
        Some(path) => Flags::from_file(path)?,
        None => Flags::default(),
    };
    let cfg = RunConfig::resolve(cli.command, cli.flags.over(file))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let (report, verdict) = pool.install(|| run::execute(&cfg))?;
    output::emit(&cfg, &report)?;
    verdict.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run_cli(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jumpcode: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

mod args;
mod commands;
mod util;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Exit status 2 for bad input, 1 for everything else.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
    /// Number of failed audit checks.
    Failed(usize),
}

impl From<sizebias::Error> for CliError {
    fn from(e: sizebias::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let jobs = match &cli.command {
        Command::Bounds(a) => a.common.jobs,
        Command::Simulate(a) => a.common.jobs,
        Command::Verify(a) => a.common.jobs,
        Command::Compare(a) => a.common.jobs,
    };
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Validation("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match &cli.command {
        Command::Bounds(a) => commands::bounds(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Verify(a) => commands::verify(a),
        Command::Compare(a) => commands::compare(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Failed(n)) => {
            eprintln!("verification failed: {n} check(s) did not pass");
            ExitCode::from(1)
        }
    }
}

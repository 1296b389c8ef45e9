mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failures that map to a specific exit code. Anything else is a data error.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Acceptance(Vec<String>),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Acceptance(v) => write!(f, "acceptance thresholds violated: {}", v.join("; ")),
        }
    }
}

impl std::error::Error for CliError {}

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_ACCEPTANCE: u8 = 4;

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("VIEWSPAN_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("VIEWSPAN_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Train(a) => commands::train(a),
        Command::Detect(a) => commands::detect(a),
        Command::Eval(a) => commands::eval(a),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on malformed arguments
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<CliError>() {
                Some(CliError::Usage(_)) => ExitCode::from(EXIT_USAGE),
                Some(CliError::Acceptance(_)) => ExitCode::from(EXIT_ACCEPTANCE),
                None => ExitCode::from(EXIT_DATA),
            }
        }
    }
}

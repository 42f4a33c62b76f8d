mod config;
mod error;
mod output;
mod run;

use clap::Parser;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use error::CliError;
use output::{write_atomic, Format};
use run::{Command, RunConfig};

/// Feedback cooling of structurally damped, optically stiffened oscillators.
#[derive(Debug, Parser)]
#[command(name = "springcool", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Seed for randomized suites and optimizer starts.
    #[arg(long)]
    seed: Option<u64>,
    /// Relative tolerance for adaptive quadrature.
    #[arg(long)]
    tol: Option<f64>,
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", cli.config.display())))?;
    let rc = RunConfig {
        command: cli.command,
        config: config::parse_config(&text)?,
        format: cli.format.unwrap_or(cli.command.default_format()),
        seed: cli.seed,
        tol: cli.tol,
    };
    let report = run::run(&rc)?;
    let text = report.output.render(rc.format)?;
    match &cli.out {
        Some(p) => write_atomic(p, &text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    report.failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("springcool: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

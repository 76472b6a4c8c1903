use std::path::PathBuf;
use std::process::ExitCode;

use bimod::{run, Command, Request};
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// Index theory and conjugate equations for finite-dimensional Hilbert
/// C*-bimodules.
#[derive(Parser, Debug)]
#[command(name = "bimod", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// One specification file, two for `verify` and `tensor`.
    #[arg(required = true, num_args = 1..=2)]
    inputs: Vec<PathBuf>,
    /// Tolerance for every check (1e-8; 1e-7 for `tensor`).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Objective evaluations for the minimal-dimension search.
    #[arg(long)]
    budget: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Leave `wall_time_ms` null so reports are reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let req = Request {
        command: cli.command,
        inputs: cli.inputs,
        tol: cli.tol,
        seed: cli.seed,
        budget: cli.budget,
        timing: !cli.no_timing,
    };
    let outcome = run(&req);
    if let Some(e) = &outcome.report.error {
        eprintln!("bimod: {e}");
    }
    let text = match cli.format {
        Format::Json => outcome.report.to_json(),
        Format::Text => outcome.report.to_text(),
    };
    match &cli.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text) {
                eprintln!("bimod: cannot write {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(outcome.exit_code as u8)
}

//! `conslaw`: experiment runner for conservation laws on the torus.
//!
//! Every subcommand reads a JSON manifest and writes its artifacts into a
//! directory named by the manifest hash under `--out`. Exit codes: 0 when
//! all declared checks hold, 1 when a check fails, 2 on bad input.
//! `CONSLAW_THREADS` caps the worker count of parallel sections.

mod commands;
mod manifest;

use clap::{Args, Parser, Subcommand};
use commands::{CliError, RunOutput};
use manifest::Manifest;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "conslaw", version, about = "Conservation-law experiments on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON manifest describing the experiment.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; artifacts land in a per-manifest subdirectory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-volume run with decay and entropy-defect diagnostics.
    Solve(RunArgs),
    /// Flux degeneracy report over Fourier modes.
    Degeneracy(RunArgs),
    /// Free-transport homogenization experiment.
    Transport(RunArgs),
    /// Band-localization inequality sweep on random fields.
    Ndloc(RunArgs),
    /// Stationary shear profile for the degenerate 2D flux.
    Counterexample(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Degeneracy(_) => "degeneracy",
            Command::Transport(_) => "transport",
            Command::Ndloc(_) => "ndloc",
            Command::Counterexample(_) => "counterexample",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Solve(a)
            | Command::Degeneracy(a)
            | Command::Transport(a)
            | Command::Ndloc(a)
            | Command::Counterexample(a) => a,
        }
    }
}

fn run(cli: &Cli) -> Result<RunOutput, CliError> {
    let args = cli.command.args();
    let bytes = std::fs::read(&args.manifest).map_err(|e| {
        CliError::BadInput(format!("cannot read manifest {}: {}", args.manifest.display(), e))
    })?;
    let manifest = Manifest::parse(&bytes).map_err(|e| CliError::BadInput(e.to_string()))?;
    if manifest.command() != cli.command.name() {
        return Err(CliError::BadInput(format!(
            "manifest key `command`: `{}` does not match subcommand `{}`",
            manifest.command(),
            cli.command.name()
        )));
    }
    match &manifest {
        Manifest::Solve(m) => commands::run_solve(m, &args.out, &bytes),
        Manifest::Degeneracy(m) => commands::run_degeneracy(m, &args.out, &bytes),
        Manifest::Transport(m) => commands::run_transport(m, &args.out, &bytes),
        Manifest::Ndloc(m) => commands::run_ndloc(m, &args.out, &bytes),
        Manifest::Counterexample(m) => commands::run_counterexample(m, &args.out, &bytes),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            println!("artifacts: {}", output.dir.display());
            let mut failed = false;
            for c in &output.checks {
                if c.pass {
                    println!("check ok: {} ({})", c.name, c.detail);
                } else {
                    eprintln!("check failed: {} ({})", c.name, c.detail);
                    failed = true;
                }
            }
            if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(CliError::Run(msg)) => {
            eprintln!("check failed: run ({})", msg);
            ExitCode::from(1)
        }
        Err(CliError::BadInput(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}

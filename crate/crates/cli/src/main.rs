use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use chiral_index::scenario::{run_scenario, Overrides, ScenarioConfig, Status};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::Value;

/// Chiral index scenarios: builds S_L and S_R, computes the index and
/// writes report.json (exit 0 finite, 2 not finite, 1 error).
#[derive(Debug, Parser)]
#[command(name = "chiral-index", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config for the scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Also write singular values, sweep tables and matrix dumps as CSV.
    #[arg(long, global = true)]
    csv: bool,

    /// Seed for the spiral μ coefficients.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Cutoff K (N for the shift system).
    #[arg(long, global = true)]
    truncation: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Finite shift system with index p.
    Shift,
    /// Conformally deformed torus, restricted index.
    Torus,
    /// Spiral model with a perturbed measure.
    Spiral,
    /// Finite-lifetime cylinder.
    Lifetime,
    /// Homotopy sweep along a lifetime or bump path.
    ConformalHomotopy,
    /// Discrete causal fermion system read from a file.
    Cfs {
        #[command(subcommand)]
        action: CfsAction,
    },
}

#[derive(Debug, Subcommand)]
enum CfsAction {
    /// Computes the index of the system in <FILE>.
    Run { file: PathBuf },
}

fn run(cli: &Cli) -> Result<Status> {
    let (name, file) = match &cli.command {
        Command::Shift => ("shift", None),
        Command::Torus => ("torus", None),
        Command::Spiral => ("spiral", None),
        Command::Lifetime => ("lifetime", None),
        Command::ConformalHomotopy => ("conformal-homotopy", None),
        Command::Cfs {
            action: CfsAction::Run { file },
        } => ("cfs-file", Some(file.clone())),
    };
    let value = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => Value::Null,
    };
    let overrides = Overrides {
        seed: cli.seed,
        truncation: cli.truncation,
        file,
    };
    let config = ScenarioConfig::parse(name, value, &overrides)?;
    let output = run_scenario(&config)?;
    let written = output
        .write(&cli.out, cli.csv)
        .with_context(|| format!("writing to {}", cli.out.display()))?;
    let verdict = match output.status {
        Status::Finite => "finite",
        Status::NotFinite => "not finite",
    };
    println!("{name}: {verdict}");
    for path in written {
        println!("  {}", path.display());
    }
    Ok(output.status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // clap would exit with 2, which is reserved for infinite kernels.
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

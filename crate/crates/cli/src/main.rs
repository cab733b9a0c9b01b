mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use commands::{BsVerifyArgs, DimArgs, InvariantArgs, LowEnergyArgs, SpectrumArgs, SumArgs, ThicknessArgs};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_INVALID: u8 = 3;

/// Spectra of continuum Fibonacci operators, their sums, and Cantor-set diagnostics.
#[derive(Debug, Parser)]
#[command(name = "fibspec", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Solver tolerance; each command has its own default.
    #[arg(long, global = true, value_parser = positive)]
    pub tol: Option<f64>,
    /// Worker threads (0: one per core). Never changes the output.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Emit JSON (default).
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// Emit CSV for plotting; the run configuration goes in a leading comment.
    #[arg(long, global = true)]
    pub csv: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl Global {
    pub fn format(&self) -> Format {
        if self.csv {
            Format::Csv
        } else {
            Format::Json
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Band approximant B_k ∪ B_{k+1} of the spectrum.
    Spectrum(SpectrumArgs),
    /// Minkowski sum of two interval sets.
    Sum(SumArgs),
    /// Thickness of an interval set.
    Thickness(ThicknessArgs),
    /// Box-counting dimension estimate.
    Dim(DimArgs),
    /// Closed-form invariant against the trace-map invariant of the initial traces.
    Invariant(InvariantArgs),
    /// Half-line coverage certificate for Σ + Σ; exit code 3 when invalid.
    BsVerify(BsVerifyArgs),
    /// Low-energy dimension and sum-measure report.
    LowEnergy(LowEnergyArgs),
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(x) => Err(format!("must be positive and finite, got {x}")),
        Err(e) => Err(e.to_string()),
    }
}

fn configure_threads(threads: usize) -> anyhow::Result<()> {
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Err(e) = configure_threads(cli.global.threads) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_USAGE);
    }
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

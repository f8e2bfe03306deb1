//! `ogcs`: bounds, single recoveries and batch experiments for overlapping
//! group sparse recovery.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ogcs_core::bounds::BoundKind;
use ogcs_core::{ScenarioKind, ValueLaw};

#[derive(Parser, Debug)]
#[command(name = "ogcs", version, about = "Overlapping group sparse recovery experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON file overriding the default configuration of the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Trials per configuration.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Use the original problem sizes instead of the reduced desk-scale ones.
    #[arg(long, global = true)]
    pub full_scale: bool,
    /// Output directory for CSV and SVG files [default: ogcs-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Evaluate the pass criteria of the subcommand; exit with code 2 on failure.
    #[arg(long, global = true)]
    pub check: bool,
}

impl Common {
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("ogcs-out"))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a measurement bound.
    Bound(BoundArgs),
    /// Recover one random group-sparse signal.
    Recover(RecoverArgs),
    /// Success rate against n for the group method and the lasso.
    Phase,
    /// Every overlap scenario at its own group bound.
    Scenarios,
    /// Monte Carlo checks of the lemmas behind the bound.
    Lemmas,
    /// Recover the Haar coefficients of the blocks signal.
    WaveletDemo(WaveletArgs),
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    /// group, noisy, lasso or chisq-max; omitted with --check to print the reference table.
    #[arg(long, value_parser = parse_bound_kind)]
    pub kind: Option<BoundKind>,
    #[arg(long = "groups", short = 'M')]
    pub m: Option<usize>,
    #[arg(long, short = 'k')]
    pub k: Option<usize>,
    #[arg(long = "group-size", short = 'B')]
    pub b: Option<usize>,
    /// Sparsity for the lasso bound.
    #[arg(long)]
    pub s: Option<usize>,
    /// Dimension for the lasso bound.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Number of χ² variables.
    #[arg(long = "count", short = 'L')]
    pub l: Option<usize>,
    /// Degrees of freedom.
    #[arg(long)]
    pub d: Option<usize>,
}

fn parse_bound_kind(s: &str) -> Result<BoundKind, String> {
    match s {
        "group" => Ok(BoundKind::Group),
        "noisy" => Ok(BoundKind::Noisy),
        "lasso" => Ok(BoundKind::Lasso),
        "chisq-max" | "chisq_max" => Ok(BoundKind::ChisqMax),
        other => Err(format!("unknown bound kind '{other}'")),
    }
}

#[derive(Args, Debug)]
pub struct RecoverArgs {
    /// Group structure JSON `{"p": .., "groups": [[..], ..]}`; overrides the scenario.
    #[arg(long)]
    pub structure: Option<PathBuf>,
    #[arg(long, default_value = "chain")]
    pub scenario: ScenarioKind,
    #[arg(long = "groups", short = 'M', default_value_t = 20)]
    pub m: usize,
    #[arg(long = "group-size", short = 'B', default_value_t = 8)]
    pub b: usize,
    #[arg(long, short = 'k', default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 4)]
    pub overlap: usize,
    /// Measurements; defaults to the group bound.
    #[arg(long, short = 'n')]
    pub n: Option<usize>,
    #[arg(long, default_value = "uniform_symmetric")]
    pub law: ValueLaw,
    /// Noise level relative to ‖Φx*‖; zero solves the equality-constrained program.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Also run the lasso on the same measurements.
    #[arg(long)]
    pub lasso: bool,
}

#[derive(Args, Debug)]
pub struct WaveletArgs {
    /// Signal length, a power of two >= 4. Defaults to 1024, or 16384 with --full-scale.
    #[arg(long)]
    pub p: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bound(args) => commands::bound(&cli.common, args),
        Command::Recover(args) => commands::recover(&cli.common, args),
        Command::Phase => commands::phase(&cli.common),
        Command::Scenarios => commands::scenarios(&cli.common),
        Command::Lemmas => commands::lemmas(&cli.common),
        Command::WaveletDemo(args) => commands::wavelet_demo(&cli.common, args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

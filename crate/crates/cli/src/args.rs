use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "fiducial", version, about = "Fiducial inference for interval-censored data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Fiducial point estimate and pointwise intervals for F on a grid
    Fit(FitArgs),
    /// Turnbull NPMLE by self-consistency
    Npmle(NpmleArgs),
    /// Monte Carlo coverage study on the built-in scenarios
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Interpolation,
    Conservative,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleArg {
    Interpolation,
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// CSV file with header `l,r`
    pub input: PathBuf,
    /// number of grid intervals on [0, largest finite endpoint]
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    pub grid_size: u32,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(2..))]
    pub n_mcmc: u32,
    #[arg(long, default_value_t = 100)]
    pub burn_in: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// 1 minus the pointwise confidence level
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Interpolation)]
    pub method: MethodArg,
    /// output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// embed every sample's lower, upper and interpolated curve (json only)
    #[arg(long)]
    pub keep_samples: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct NpmleArgs {
    /// CSV file with header `l,r`
    pub input: PathBuf,
    /// resolution of F inside Turnbull intervals for the `point` curve
    #[arg(long, value_enum, default_value_t = RuleArg::Interpolation)]
    pub rule: RuleArg,
    /// stop when no mass moves by more than this
    #[arg(long, default_value_t = 1e-9, value_parser = parse_positive)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_iter: u32,
    /// plain self-consistency updates, without extrapolation steps
    #[arg(long)]
    pub plain: bool,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    pub grid_size: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// scenario ids; repeat or comma-separate for several
    #[arg(long, required = true, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(1..=4))]
    pub scenario: Vec<u8>,
    /// sample sizes; repeat or comma-separate for several
    #[arg(long, default_value = "100", value_delimiter = ',', value_parser = clap::value_parser!(u32).range(1..))]
    pub n: Vec<u32>,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(1..))]
    pub reps: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// worker threads (all cores when omitted); has no effect on results
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    #[serde(skip)]
    pub jobs: Option<u32>,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(2..))]
    pub n_mcmc: u32,
    #[arg(long, default_value_t = 100)]
    pub burn_in: u32,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Table)]
    pub format: TableFormat,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("alpha must lie in (0, 1), got {a}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a positive number, got {x}"))
    }
}

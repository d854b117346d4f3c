use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "wpfair", version, about = "Wasserstein projection fairness tests for regression models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a fitted or supplied model for fairness.
    Test(TestArgs),
    /// Repair the data towards the fair set and rank the moved features.
    Perturb(PerturbArgs),
    /// Seeded synthetic experiments.
    #[command(subcommand)]
    Simulate(SimulateCommand),
}

#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    #[serde(skip)]
    pub data: PathBuf,

    /// Column schema file.
    #[arg(long)]
    #[serde(skip)]
    pub schema: PathBuf,

    /// Override the sensitive column: `COLUMN` or `COLUMN=REFERENCE`.
    /// Rows at the reference level form group 0.
    #[arg(long, conflicts_with = "split_median")]
    pub sensitive: Option<String>,

    /// Override the sensitive column with a strict median split.
    #[arg(long)]
    pub split_median: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    Ols,
    Ridge,
    Lasso,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Fit a linear model on the loaded data.
    #[arg(long, value_enum, required_unless_present = "model_file", conflicts_with = "model_file")]
    pub fit: Option<FitKind>,

    /// Penalty for ridge and lasso.
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,

    /// JSON file `{"rho": [...], "sigma": s}` with one coefficient per
    /// encoded feature.
    #[arg(long)]
    #[serde(skip)]
    pub model_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionKind {
    EqualMean,
    AccuracyParity,
    BoundedLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Absolute,
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaKind {
    SecondMoment,
    Centered,
}

#[derive(Debug, Args, Serialize)]
pub struct CriterionArgs {
    #[arg(long, value_enum, default_value_t = CriterionKind::EqualMean)]
    pub criterion: CriterionKind,

    /// Error function for accuracy parity and bounded loss.
    #[arg(long, value_enum, default_value_t = ErrorKind::Squared)]
    pub error: ErrorKind,

    /// Per-group tolerances `e0,e1`; switches to the tolerance form.
    #[arg(long, value_parser = parse_pair)]
    pub tolerance: Option<(f64, f64)>,

    /// Feature weight of the transport cost.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    /// Label weight of the transport cost [default: 0 for equal-mean, 1 otherwise].
    #[arg(long)]
    pub beta: Option<f64>,

    /// Use the dual solver even when the closed form applies.
    #[arg(long)]
    pub force_dual: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub criterion: CriterionArgs,

    #[arg(long, value_enum, default_value_t = ThetaKind::SecondMoment)]
    pub theta: ThetaKind,

    /// Significance level.
    #[arg(long, default_value_t = 0.05, value_parser = parse_level)]
    pub level: f64,

    /// Also run the permutation test.
    #[arg(long)]
    pub baseline: bool,

    #[arg(long, default_value_t = 1000)]
    pub permutations: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Directory for the result payload and fitted model.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub criterion: CriterionArgs,

    /// Repair strength in [0, 1]; 1 projects onto the fair set.
    #[arg(long, value_parser = parse_eta)]
    pub eta: f64,

    /// Use the generic per-point repair even when the closed form applies.
    #[arg(long)]
    pub force_generic: bool,

    /// Directory for the perturbed CSV and the feature ranking.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Power and specificity of both tests over a grid.
    Power(PowerArgs),
    /// Distance of `N T / theta` from the chi-square limit.
    ValidateLimiting(LimitingArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PowerArgs {
    /// JSON array of simulation configs; replaces the grid flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long, value_delimiter = ',', default_value = "40,80,120,160")]
    pub n: Vec<usize>,

    #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.4,0.6,0.8,1")]
    pub effect: Vec<f64>,

    /// Significance levels.
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    pub level: Vec<f64>,

    #[arg(long, default_value_t = 100)]
    pub trials: usize,

    #[arg(long, default_value_t = 1000)]
    pub permutations: usize,

    #[arg(long, default_value_t = 0.5)]
    pub p0: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = ThetaKind::SecondMoment)]
    pub theta: ThetaKind,

    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    /// Also write one file per figure panel.
    #[arg(long, requires = "out")]
    pub plot_data: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct LimitingArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,

    #[arg(long, default_value_t = 1000)]
    pub reps: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = ThetaKind::SecondMoment)]
    pub theta: ThetaKind,

    /// Directory for the sample file.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `e0,e1`")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

fn parse_eta(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("eta must lie in [0, 1], got {v}"))
    }
}

fn parse_level(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("level must lie in (0, 1), got {v}"))
    }
}

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use schedbound_core::schedule::{CooldownShape, ScheduleSpec};
use serde::{Serialize, Serializer};

/// Environment variable that supplies `--out-dir` when the flag is absent.
pub const OUT_DIR_ENV: &str = "SCHEDBOUND_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "schedbound", version, about = "Suboptimality bounds for learning-rate schedules")]
pub struct Cli {
    /// Stdout format when no output directory is set.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write every table as CSV plus summary.json into this directory.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,

    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump a schedule as (t, eta).
    Schedule(ScheduleArgs),
    /// Evaluate the bound curve of a schedule.
    Bound(BoundArgs),
    /// Final bound over a grid of base learning-rates.
    SweepGamma(SweepGammaArgs),
    /// Final bound of wsd over a grid of cooldown fractions.
    SweepCooldown(SweepCooldownArgs),
    /// Build a longer schedule that keeps the tuned base learning-rate.
    TransferHorizon(TransferHorizonArgs),
    /// ln(gamma*(1) / gamma*(c)) over cooldown fractions.
    TransferLr(TransferLrArgs),
    /// Subgradient descent on a random l-infinity regression problem.
    ToyRun(ToyRunArgs),
    /// The wsd / constant / cosine toy comparison.
    ToyCompare(ToyCompareArgs),
    /// Extra tokens or parameters equivalent to a loss difference.
    ScalingLaw(ScalingLawArgs),
    /// Least-squares fit of (x, y) points read from CSV.
    Fit(FitArgs),
    /// Reproduce a named experiment with pinned settings.
    Repro(ReproArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Schedule(_) => "schedule",
            Command::Bound(_) => "bound",
            Command::SweepGamma(_) => "sweep-gamma",
            Command::SweepCooldown(_) => "sweep-cooldown",
            Command::TransferHorizon(_) => "transfer-horizon",
            Command::TransferLr(_) => "transfer-lr",
            Command::ToyRun(_) => "toy-run",
            Command::ToyCompare(_) => "toy-compare",
            Command::ScalingLaw(_) => "scaling-law",
            Command::Fit(_) => "fit",
            Command::Repro(_) => "repro",
        }
    }
}

fn parse_schedule(s: &str) -> Result<ScheduleSpec, String> {
    s.parse().map_err(|e: schedbound_core::Error| e.to_string())
}

fn parse_shape(s: &str) -> Result<CooldownShape, String> {
    s.parse().map_err(|e: schedbound_core::Error| e.to_string())
}

/// `--gamma <value>` or `--gamma star`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaArg {
    Value(f64),
    Star,
}

impl FromStr for GammaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "star" {
            return Ok(GammaArg::Star);
        }
        let v: f64 = s.parse().map_err(|_| format!("expected a number or `star`, got `{s}`"))?;
        if v > 0.0 && v.is_finite() {
            Ok(GammaArg::Value(v))
        } else {
            Err(format!("gamma must be positive, got {v}"))
        }
    }
}

impl Serialize for GammaArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            GammaArg::Value(v) => s.serialize_f64(*v),
            GammaArg::Star => s.serialize_str("star"),
        }
    }
}

/// Distance to the optimum and gradient-norm model `G_t = G * t^alpha`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ProblemArgs {
    #[arg(long = "D", default_value_t = 1.0)]
    #[serde(rename = "D")]
    pub d: f64,
    #[arg(long = "G", default_value_t = 1.0)]
    #[serde(rename = "G")]
    pub g: f64,
    /// Exponent of a decaying gradient-norm bound (`<= 0`).
    #[arg(long, allow_hyphen_values = true)]
    pub grad_alpha: Option<f64>,
}

/// Grid bounds; all three or none.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    #[arg(long, requires_all = ["grid_max", "grid_points"])]
    pub grid_min: Option<f64>,
    #[arg(long, requires_all = ["grid_min", "grid_points"])]
    pub grid_max: Option<f64>,
    #[arg(long, requires_all = ["grid_min", "grid_max"])]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScheduleArgs {
    /// Schedule spec, e.g. `wsd:T=4000,c=0.2,shape=linear`.
    #[arg(long, value_parser = parse_schedule)]
    pub schedule: ScheduleSpec,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundArgs {
    #[arg(long, value_parser = parse_schedule)]
    pub schedule: ScheduleSpec,
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    /// Base learning-rate, or `star` for the optimal one at the final horizon.
    #[arg(long, default_value = "star")]
    pub gamma: GammaArg,
    /// Evaluate every `stride`-th horizon (default: at most ~2000 points).
    #[arg(long)]
    pub stride: Option<usize>,
    /// Also evaluate the min-suboptimality variant.
    #[arg(long)]
    pub ablation: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepGammaArgs {
    #[arg(long, value_parser = parse_schedule)]
    pub schedule: ScheduleSpec,
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    /// Log-spaced gamma grid (default: 61 points over three decades around gamma*).
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepCooldownArgs {
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon: usize,
    #[arg(long, default_value = "linear", value_parser = parse_shape)]
    pub shape: CooldownShape,
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    /// Fixed base learning-rate, or `star` to tune it per fraction.
    #[arg(long, default_value = "star")]
    pub gamma: GammaArg,
    /// Log-spaced fraction grid (default: 50 points on [0.02, 1]).
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferMode {
    Rho,
    Cooldown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseArg {
    Constant,
    Invsqrt,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TransferHorizonArgs {
    #[arg(long, value_enum)]
    pub mode: TransferMode,
    #[arg(long = "T1")]
    #[serde(rename = "T1")]
    pub short_horizon: usize,
    #[arg(long = "T2")]
    #[serde(rename = "T2")]
    pub long_horizon: usize,
    /// Cooldown fraction of the short run.
    #[arg(long, default_value_t = 0.2)]
    pub c: f64,
    /// Schedule before the cooldown, for `--mode cooldown`.
    #[arg(long, value_enum, default_value = "constant")]
    pub base: BaseArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    /// Linear search grid (default: 100 points on [0.01, 1]).
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TransferLrArgs {
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon: usize,
    #[arg(long, default_value = "linear", value_parser = parse_shape)]
    pub shape: CooldownShape,
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    /// Log-spaced fraction grid (default: 50 points on [0.02, 1]).
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ToyRunArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_schedule)]
    pub schedule: ScheduleSpec,
    #[arg(long)]
    pub gamma: f64,
    /// Rows of A.
    #[arg(long, default_value_t = 20)]
    pub rows: usize,
    /// Dimension of x.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Comma-separated start point (default: origin).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub start: Option<Vec<f64>>,
    /// Also emit the iterates table.
    #[arg(long)]
    pub iterates: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ToyCompareArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveFor {
    Tokens,
    Params,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScalingLawArgs {
    #[arg(long)]
    pub delta: f64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: f64,
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub d: f64,
    #[arg(long, value_enum)]
    pub solve: SolveFor,
    /// Apply the vocabulary correction factor to the loss.
    #[arg(long)]
    pub vocab_adjust: bool,
    #[arg(long = "E")]
    #[serde(rename = "E")]
    pub e: Option<f64>,
    #[arg(long = "A")]
    #[serde(rename = "A")]
    pub a: Option<f64>,
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub b: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModelArg {
    /// A / gamma + B gamma + C
    Hgamma,
    /// a / sqrt(T)
    Invsqrt,
    /// Degree-6 polynomial.
    Poly6,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub model: FitModelArg,
    /// CSV file with header `x,y`.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReproId {
    /// Optimal base learning-rate against horizon, wsd and cosine.
    Fig4,
    /// Step-down factor for 2x and 4x continued training.
    RhoTransfer,
    /// Enlarged cooldown for 2x continued training.
    CooldownTransfer,
    /// ln(gamma*(1) / gamma*(c)) for linear and 1-sqrt cooldowns.
    LrTransfer,
    /// Bound against cooldown fraction, tuned and fixed gamma.
    CooldownLength,
    /// Bound curves for decaying gradient norms.
    GradNorm,
    /// Longer runs with and without retuning.
    MultiHorizon,
    /// The toy subgradient-descent comparison.
    Toy,
    /// Classical schedules side by side.
    ScheduleComparison,
    /// Cosine restarts.
    CosineCycle,
    /// Bound against its min-suboptimality variant.
    Ablation,
    /// Loss differences as tokens and parameters.
    ScalingLaw,
    /// Harmonic numbers and the wsd closed form at large horizons.
    WsdNumerics,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReproArgs {
    #[arg(value_enum)]
    pub id: ReproId,
}

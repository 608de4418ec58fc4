use std::path::PathBuf;
use std::str::FromStr;

use agnostic_control::solvers::log_grid;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "acl",
    version,
    about = "Closed-form and regret-optimal control of dq = (a + u) dt + dW",
    after_help = "Set ACL_THREADS to fix the worker thread count. \
                  Exit codes: 0 ok, 2 usage or domain error, 3 step budget exceeded, \
                  4 solver failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the value-function coefficients E2, E1, E0, E# as JSON.
    Gains(GainsArgs),
    /// Write the CSV tables behind the sigma*, MR* and fuel-tax figures.
    Figures(FiguresArgs),
    /// Monte Carlo estimate of a strategy's expected cost.
    Simulate(SimulateArgs),
    /// Closed-form regret table for a Bayesian strategy.
    Regret(RegretArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GainsArgs {
    /// Horizon.
    #[arg(long = "T", value_name = "T")]
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Evaluation time in [0, T].
    #[arg(long = "t", default_value_t = 0.0)]
    pub t: f64,
    /// Fuel weight (>= 1).
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Which {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct FiguresArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub which: Which,
    /// Horizon grid: `lo:hi:n` (log-spaced) or a comma-separated list.
    #[arg(long, default_value = "0.1:20:40")]
    pub grid: Grid,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    #[value(name = "known_a", alias = "known-a")]
    KnownA,
    Bayes,
    Zero,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub strategy: StrategyKind,
    /// True drift (also the drift `known_a` plays with).
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long = "T", value_name = "T", default_value_t = 1.0)]
    #[serde(rename = "T")]
    pub horizon: f64,
    /// End of the uncontrolled observation phase.
    #[arg(long = "T0", value_name = "T0", default_value_t = 0.0)]
    #[serde(rename = "T0")]
    pub t0: f64,
    /// Prior width for `bayes`: a number, `improper`, or `auto` (sigma*_MR).
    #[arg(long)]
    pub sigma: Option<SigmaArg>,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Upper bound on paths x steps.
    #[arg(long, default_value_t = 1_000_000_000)]
    pub budget: u128,
    /// Directory for simulate.json, its manifest and trajectory dumps.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of leading paths to dump as `path_<i>.csv` (needs --out).
    #[arg(long, default_value_t = 0, requires = "out")]
    pub dump_paths: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Additive,
    Multiplicative,
    Fueltax,
}

#[derive(Debug, Args, Serialize)]
pub struct RegretArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long = "T", value_name = "T")]
    #[serde(rename = "T")]
    pub horizon: f64,
    #[arg(long = "T0", value_name = "T0", default_value_t = 0.0)]
    #[serde(rename = "T0")]
    pub t0: f64,
    /// A number, `improper`, or `auto` (solve for the regret-flattening width).
    #[arg(long, default_value = "auto")]
    pub sigma: SigmaArg,
    /// Opponent fuel weight for `fueltax` with an explicit sigma.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Comma-separated drifts; defaults to 0, ±0.25, ±0.5, ±1, ±2, ±5, ±10.
    #[arg(long, allow_hyphen_values = true)]
    pub a_grid: Option<Grid>,
    /// Directory for regret.json, regret.csv and the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaArg {
    Value(f64),
    Improper,
    Auto,
}

impl FromStr for SigmaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(SigmaArg::Auto),
            "improper" | "inf" => Ok(SigmaArg::Improper),
            _ => s
                .parse::<f64>()
                .map(SigmaArg::Value)
                .map_err(|_| format!("expected a number, `auto` or `improper`, got `{s}`")),
        }
    }
}

/// A list of values, given explicitly or as a log-spaced range.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{x}` is not a number"))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [lo, hi, n] => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                let n: usize = n
                    .trim()
                    .parse()
                    .map_err(|_| format!("`{n}` is not a count"))?;
                if !(lo > 0.0 && hi > lo && n >= 2) {
                    return Err("range grid needs 0 < lo < hi and n >= 2".into());
                }
                Ok(Grid(log_grid(lo, hi, n)))
            }
            [list] => list.split(',').map(num).collect::<Result<_, _>>().map(Grid),
            _ => Err(format!("bad grid `{s}`: use lo:hi:n or a comma list")),
        }
    }
}

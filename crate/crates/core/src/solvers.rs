//! Prior widths that make a regret independent of the drift, and sweeps of
//! the resulting worst-case regrets over the horizon.
//!
//! The ratio of our expected cost to the known-drift opponent's is
//! `(n2 a² + n0) / (d2 a² + d0)`, a Möbius function of `a²`. It is constant
//! exactly when `n2 / d2 = n0 / d0`, a single equation in the prior width
//! `σ`. For the multiplicative regret the opponent is untaxed; for the fuel
//! tax the opponent pays `λ` and an outer solve drives the constant ratio to
//! one.

use rayon::prelude::*;
use serde::Serialize;

use crate::bayes::GaussianPrior;
use crate::error::{Error, Result};
use crate::model::{GainSchedule, ProblemSpec};
use crate::performance::{
    cost_ratio, default_a_grid, expected_delayed_cost, expected_optimal_cost, ratio_residual,
    CostRatio,
};
use crate::roots::{bracketed_newton, NewtonOptions, SolveResult};

/// Fixed numerical settings of the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverSettings {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub scan_points: usize,
    /// Bisection stops at this width (in `ln σ`, or in `λ`).
    pub bracket_width: f64,
    pub sigma_residual_tol: f64,
    pub lambda_residual_tol: f64,
    pub diff_step: f64,
    pub max_iterations: usize,
    pub lambda_max: f64,
    /// Allowed spread of a certified constant ratio.
    pub certify_spread: f64,
}

pub const SETTINGS: SolverSettings = SolverSettings {
    sigma_min: 1e-3,
    sigma_max: 1e3,
    scan_points: 25,
    bracket_width: 1e-2,
    sigma_residual_tol: 1e-9,
    lambda_residual_tol: 1e-8,
    diff_step: 1e-6,
    max_iterations: 200,
    lambda_max: 10.0,
    certify_spread: 1e-6,
};

/// Drift values used to certify a constant ratio, besides the `a → ∞` limit.
pub const CERTIFY_GRID: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0];

/// A prior width that makes the cost ratio constant in the drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaSolution {
    pub horizon: f64,
    pub fuel_weight: f64,
    pub sigma: f64,
    pub ratio: CostRatio,
    pub solve: SolveResult,
}

impl SigmaSolution {
    pub fn prior(&self) -> GaussianPrior {
        GaussianPrior::Proper { sigma: self.sigma }
    }

    /// The common value of the (constant) ratio.
    pub fn constant_ratio(&self) -> f64 {
        self.ratio.at_zero()
    }

    /// Spread of the ratio over [`CERTIFY_GRID`] and the `a → ∞` limit.
    pub fn certified_spread(&self) -> f64 {
        let values = CERTIFY_GRID
            .iter()
            .map(|&a| self.ratio.eval(a))
            .chain(std::iter::once(self.ratio.limit()));
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        hi - lo
    }
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    i if i == n - 1 => hi,
                    i => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

fn residual_at(log_sigma: f64, spec: &ProblemSpec) -> Result<f64> {
    ratio_residual(&GaussianPrior::new(log_sigma.exp())?, spec)
}

/// Solve for the `σ` making the ratio of our cost to that of an opponent
/// with fuel weight `fuel_weight` independent of the drift.
pub fn solve_constant_ratio(horizon: f64, fuel_weight: f64) -> Result<SigmaSolution> {
    let spec = ProblemSpec::new(0.0, horizon, fuel_weight)?;
    let s = SETTINGS;
    let grid = log_grid(s.sigma_min, s.sigma_max, s.scan_points);
    let mut scan = Vec::with_capacity(grid.len());
    let mut bracket = None;
    for sigma in grid {
        let r = residual_at(sigma.ln(), &spec)?;
        if let Some(&(prev, rp)) = scan.last() {
            if bracket.is_none() && (rp <= 0.0) != (r <= 0.0) {
                bracket = Some((f64::ln(prev), sigma.ln()));
            }
        }
        scan.push((sigma, r));
        if bracket.is_some() {
            break;
        }
    }
    let Some((lo, hi)) = bracket else {
        return Err(Error::NoRoot {
            message: format!(
                "constant-ratio residual keeps one sign for sigma in [{}, {}] (T = {horizon}, lambda = {fuel_weight})",
                s.sigma_min, s.sigma_max
            ),
            scan,
        });
    };
    let opts = NewtonOptions {
        bracket_width: s.bracket_width,
        residual_tol: s.sigma_residual_tol,
        diff_step: s.diff_step,
        max_iterations: s.max_iterations,
    };
    let solve = bracketed_newton(|x| residual_at(x, &spec), lo, hi, opts)?;
    let sigma = solve.root.exp();
    let ratio = cost_ratio(&GaussianPrior::new(sigma)?, &spec)?;
    let sol = SigmaSolution {
        horizon,
        fuel_weight,
        sigma,
        ratio,
        solve: SolveResult {
            root: sigma,
            bracket: (solve.bracket.0.exp(), solve.bracket.1.exp()),
            ..solve
        },
    };
    let spread = sol.certified_spread();
    if !(spread <= s.certify_spread) {
        return Err(Error::Certification(format!(
            "ratio spread {spread:.3e} at sigma = {sigma} exceeds {:.1e}",
            s.certify_spread
        )));
    }
    Ok(sol)
}

/// The prior width giving constant multiplicative regret for horizon `T`.
pub fn solve_sigma_mr(horizon: f64) -> Result<SigmaSolution> {
    solve_constant_ratio(horizon, 1.0)
}

/// Worst-case multiplicative regret of the optimal (constant-regret)
/// Bayesian strategy.
pub fn worst_case_mr(horizon: f64) -> Result<f64> {
    Ok(solve_sigma_mr(horizon)?.ratio.sup())
}

/// Worst-case multiplicative regret of the Bayesian strategy with a fixed
/// prior: the max over the default drift grid and the `a → ∞` limit.
pub fn worst_case_mr_fixed(prior: &GaussianPrior, horizon: f64) -> Result<f64> {
    let ratio = cost_ratio(prior, &ProblemSpec::with_horizon(horizon)?)?;
    Ok(default_a_grid()
        .into_iter()
        .map(|a| ratio.eval(a))
        .fold(ratio.limit(), f64::max))
}

/// Worst-case multiplicative regret, in the game started at `t = 0`, of a
/// Bayesian strategy that stays idle until `delay` (and pays for the idle
/// stretch). Max over the default drift grid and the `a → ∞` limit.
pub fn worst_case_mr_delayed(prior: &GaussianPrior, delay: f64, horizon: f64) -> Result<f64> {
    let spec = ProblemSpec::with_horizon(horizon)?;
    let ratio = |a: f64| -> Result<f64> {
        Ok(expected_delayed_cost(a, prior, delay, horizon)? / expected_optimal_cost(a, &spec))
    };
    // both costs are quadratic in a
    let base = expected_delayed_cost(0.0, prior, delay, horizon)?;
    let slope = expected_delayed_cost(1.0, prior, delay, horizon)? - base;
    let limit = slope / GainSchedule::at_remaining(horizon, 1.0).e0;
    default_a_grid()
        .into_iter()
        .try_fold(limit, |m, a| Ok(m.max(ratio(a)?)))
}

/// Optimal fuel-tax strategy for one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FuelTaxSolution {
    pub horizon: f64,
    pub lambda: f64,
    pub sigma: f64,
    /// The constant cost ratio at `(σ, λ*)`; one up to tolerance.
    pub ratio: f64,
    pub outer: SolveResult,
    pub inner: SolveResult,
}

/// Constant ratio minus one at fuel weight `lambda`.
///
/// When no `σ` equalises the ratio because even the narrowest prior already
/// beats the taxed opponent at every drift, returns the (negative) worst-case
/// ratio of that narrowest prior minus one.
fn fueltax_gap(horizon: f64, lambda: f64) -> Result<f64> {
    match solve_constant_ratio(horizon, lambda) {
        Ok(sol) => Ok(sol.constant_ratio() - 1.0),
        Err(Error::NoRoot { scan, .. }) if scan.first().is_some_and(|&(_, r)| r < 0.0) => {
            let prior = GaussianPrior::new(SETTINGS.sigma_min)?;
            let spec = ProblemSpec::new(0.0, horizon, lambda)?;
            Ok(cost_ratio(&prior, &spec)?.sup() - 1.0)
        }
        Err(e) => Err(e),
    }
}

/// Smallest fuel weight `λ*` such that some Bayesian strategy never costs
/// more than the taxed known-drift opponent, with the prior width achieving
/// it.
pub fn solve_fueltax(horizon: f64) -> Result<FuelTaxSolution> {
    ProblemSpec::with_horizon(horizon)?;
    let s = SETTINGS;
    let top = fueltax_gap(horizon, s.lambda_max)?;
    if top > 0.0 {
        return Err(Error::NoRoot {
            message: format!(
                "constant ratio still exceeds one at lambda = {} (T = {horizon})",
                s.lambda_max
            ),
            scan: vec![(s.lambda_max, top)],
        });
    }
    let opts = NewtonOptions {
        bracket_width: s.bracket_width,
        residual_tol: s.lambda_residual_tol,
        diff_step: s.diff_step,
        max_iterations: s.max_iterations,
    };
    let outer = bracketed_newton(|lam| fueltax_gap(horizon, lam), 1.0, s.lambda_max, opts)?;
    let inner = solve_constant_ratio(horizon, outer.root)?;
    Ok(FuelTaxSolution {
        horizon,
        lambda: outer.root,
        sigma: inner.sigma,
        ratio: inner.constant_ratio(),
        outer,
        inner: inner.solve,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepQuantity {
    SigmaMr,
    MrStar,
    FuelTax,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub horizon: f64,
    /// The swept quantity: `σ*`, `MR*` or `λ*`.
    pub value: Option<f64>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub quantity: SweepQuantity,
    pub settings: SolverSettings,
    pub records: Vec<SweepRecord>,
}

impl SweepTable {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.value.is_none()).count()
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.value).collect()
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain("horizon grid is empty"));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::domain("horizon grid must be positive and finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("horizon grid must be strictly increasing"));
    }
    Ok(())
}

fn solve_point(quantity: SweepQuantity, horizon: f64) -> SweepRecord {
    let solved = match quantity {
        SweepQuantity::SigmaMr => solve_sigma_mr(horizon).map(|s| (s.sigma, Some(s.sigma), None)),
        SweepQuantity::MrStar => {
            solve_sigma_mr(horizon).map(|s| (s.ratio.sup(), Some(s.sigma), None))
        }
        SweepQuantity::FuelTax => {
            solve_fueltax(horizon).map(|s| (s.lambda, Some(s.sigma), Some(s.lambda)))
        }
    };
    match solved {
        Ok((value, sigma, lambda)) => SweepRecord {
            horizon,
            value: Some(value),
            sigma,
            lambda,
            error: None,
        },
        Err(e) => SweepRecord {
            horizon,
            value: None,
            sigma: None,
            lambda: None,
            error: Some(e.to_string()),
        },
    }
}

/// Solve `quantity` at every horizon of `grid`. Points run in parallel on
/// the current rayon pool; records keep grid order and failures are kept as
/// records with `value = None`.
pub fn sweep(quantity: SweepQuantity, grid: &[f64]) -> Result<SweepTable> {
    check_grid(grid)?;
    let records = grid.par_iter().map(|&t| solve_point(quantity, t)).collect();
    Ok(SweepTable {
        quantity,
        settings: SETTINGS,
        records,
    })
}

/// Worst-case multiplicative regret of one fixed prior across `grid`.
pub fn fixed_prior_curve(prior: &GaussianPrior, grid: &[f64]) -> Result<Vec<Result<f64>>> {
    check_grid(grid)?;
    Ok(grid
        .par_iter()
        .map(|&t| worst_case_mr_fixed(prior, t))
        .collect())
}

//! Expected cost of the Bayesian strategy when the true drift is fixed, and
//! the regret functionals built from it.
//!
//! Playing the Gaussian-prior Bayesian law against a fixed drift `a`, the
//! expected cost-to-go is
//!
//! ```text
//! 𝒥 = E2 q² + E1 q a + E0 a² + F0(t) (ā(ξ, t) - a)² + F#(t)
//! ```
//!
//! with untaxed gains `E*` and two extra coefficients
//!
//! ```text
//! F0(t) = (t + p)² ∫_t^T E1(s)² / (4 (s + p)²) ds
//! F#(t) = ∫_t^T [E2(s) + F0(s) / (s + p)²] ds
//! ```
//!
//! where `p = σ⁻²`. [`perf_coeffs`] evaluates these by adaptive quadrature;
//! [`perf_coeffs_ode`] integrates the equivalent backward ODEs with RK4 and
//! serves as the independent cross-check.

use serde::Serialize;

use crate::bayes::{posterior, ControlState, GaussianPrior};
use crate::error::{Error, Result};
use crate::model::{GainSchedule, ProblemSpec};
use crate::quadrature::{integrate, Tolerance};

/// `F0` and `F#` at one instant. `f_sharp_excess` is `F# - E#`, kept
/// separately because regret formulas need it without cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerfCoeffs {
    pub f0: f64,
    pub f_sharp: f64,
    pub f_sharp_excess: f64,
}

fn unit_gains(s: f64, horizon: f64) -> GainSchedule {
    GainSchedule::at_remaining(horizon - s, 1.0)
}

fn check_prior_time(t: f64, prior: &GaussianPrior) -> Result<()> {
    if prior.is_improper() && t <= 0.0 {
        return Err(Error::singular(
            "F# diverges at t = 0 under the improper prior",
        ));
    }
    Ok(())
}

/// `F0(t)` and `F#(t)` by adaptive Gauss–Kronrod quadrature.
///
/// Swapping the order of integration in the `F#` double integral gives
/// `F#(t) - E#(t) = ∫_t^T (s - t) E1(s)² / (4 (s + p)²) ds`, so both
/// coefficients cost one one-dimensional quadrature each.
pub fn perf_coeffs(t: f64, prior: &GaussianPrior, spec: &ProblemSpec) -> Result<PerfCoeffs> {
    spec.check_time(t)?;
    check_prior_time(t, prior)?;
    let horizon = spec.horizon();
    let p = prior.precision();
    let tol = Tolerance::default();

    let f0 = integrate(
        |s| {
            let e1 = unit_gains(s, horizon).e1;
            let w = (t + p) / (s + p);
            0.25 * e1 * e1 * w * w
        },
        t,
        horizon,
        tol,
    )?
    .value;
    let excess = integrate(
        |s| {
            let e1 = unit_gains(s, horizon).e1;
            let d = s + p;
            0.25 * (s - t) * e1 * e1 / (d * d)
        },
        t,
        horizon,
        tol,
    )?
    .value;
    let e_sharp = unit_gains(t, horizon).e_sharp;
    Ok(PerfCoeffs {
        f0,
        f_sharp: e_sharp + excess,
        f_sharp_excess: excess,
    })
}

/// Default step count for [`perf_coeffs_ode`].
pub fn default_ode_steps(t: f64, spec: &ProblemSpec) -> usize {
    (((spec.horizon() - t) / 1.0e-4).ceil() as usize).max(4000)
}

/// `F0(t)` and `F#(t)` by classical RK4 on
///
/// ```text
/// -F0' = -2 F0 / (t + p) + E1² / 4,     F0(T) = 0
/// -F#' = E2 + F0 / (t + p)²,            F#(T) = 0
/// ```
///
/// integrated backward from `T` in `steps` equal steps.
pub fn perf_coeffs_ode(
    t: f64,
    prior: &GaussianPrior,
    spec: &ProblemSpec,
    steps: usize,
) -> Result<PerfCoeffs> {
    spec.check_time(t)?;
    check_prior_time(t, prior)?;
    if steps == 0 {
        return Err(Error::domain("RK4 needs at least one step"));
    }
    let horizon = spec.horizon();
    let p = prior.precision();
    // d/ds of (F0, F#)
    let rhs = |s: f64, f0: f64| -> (f64, f64) {
        let g = unit_gains(s, horizon);
        let d = s + p;
        (2.0 * f0 / d - 0.25 * g.e1 * g.e1, -g.e2 - f0 / (d * d))
    };

    let h = -(horizon - t) / steps as f64;
    let (mut f0, mut fs) = (0.0, 0.0);
    for k in 0..steps {
        let s = horizon + k as f64 * h;
        let (k1a, k1b) = rhs(s, f0);
        let (k2a, k2b) = rhs(s + 0.5 * h, f0 + 0.5 * h * k1a);
        let (k3a, k3b) = rhs(s + 0.5 * h, f0 + 0.5 * h * k2a);
        let (k4a, k4b) = rhs(s + h, f0 + h * k3a);
        f0 += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        fs += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
    }
    let e_sharp = unit_gains(t, horizon).e_sharp;
    Ok(PerfCoeffs {
        f0,
        f_sharp: fs,
        f_sharp_excess: fs - e_sharp,
    })
}

/// Expected cost-to-go of the Bayesian strategy from `(q, ξ, t)` when the
/// true drift is `a`.
pub fn bayes_cost(
    q: f64,
    xi: f64,
    t: f64,
    a: f64,
    prior: &GaussianPrior,
    spec: &ProblemSpec,
) -> Result<f64> {
    let c = perf_coeffs(t, prior, spec)?;
    let mean = posterior(&ControlState::new(q, xi, t), prior)?.mean;
    let g = unit_gains(t, spec.horizon());
    let miss = mean - a;
    Ok(g.e2 * q * q + g.e1 * q * a + g.e0 * a * a + c.f0 * miss * miss + c.f_sharp)
}

/// `E[(ā(ξ(T0), T0) - a)²]` after an uncontrolled observation phase of length
/// `t0`: `(T0 + a² p²) / (T0 + p)²`.
fn expected_squared_miss(a: f64, t0: f64, prior: &GaussianPrior) -> Result<f64> {
    let p = prior.precision();
    let info = t0 + p;
    if !(info > 0.0) {
        return Err(Error::singular(
            "improper prior needs a positive observation phase",
        ));
    }
    Ok((t0 + a * a * p * p) / (info * info))
}

/// Additive regret of the Bayesian strategy after the observation phase
/// `[0, T0]`, `T0 = spec.t_start() > 0`.
pub fn additive_regret(a: f64, prior: &GaussianPrior, spec: &ProblemSpec) -> Result<f64> {
    let t0 = spec.t_start();
    if !(t0 > 0.0) {
        return Err(Error::domain(
            "additive regret needs T0 > 0 (it is infinite at T0 = 0)",
        ));
    }
    let c = perf_coeffs(t0, prior, spec)?;
    Ok(c.f0 * expected_squared_miss(a, t0, prior)? + c.f_sharp_excess)
}

/// A ratio `(n2 a² + n0) / (d2 a² + d0)` of two expected costs, both
/// quadratic in the drift. Monotone in `a²` between its value at `a = 0` and
/// its limit as `|a| → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostRatio {
    pub num_a2: f64,
    pub num_0: f64,
    pub den_a2: f64,
    pub den_0: f64,
}

impl CostRatio {
    pub fn eval(&self, a: f64) -> f64 {
        let a2 = a * a;
        (self.num_a2 * a2 + self.num_0) / (self.den_a2 * a2 + self.den_0)
    }

    pub fn at_zero(&self) -> f64 {
        self.num_0 / self.den_0
    }

    pub fn limit(&self) -> f64 {
        self.num_a2 / self.den_a2
    }

    /// Supremum over all real `a`.
    pub fn sup(&self) -> f64 {
        self.at_zero().max(self.limit())
    }

    /// `limit - at_zero`; zero exactly when the ratio is constant in `a`.
    pub fn spread(&self) -> f64 {
        self.limit() - self.at_zero()
    }
}

/// Cost ratio of the Bayesian strategy (untaxed) against the known-drift
/// optimum at the fuel weight in `spec`, both from `t = 0`.
pub fn cost_ratio(prior: &GaussianPrior, spec: &ProblemSpec) -> Result<CostRatio> {
    if spec.t_start() != 0.0 {
        return Err(Error::domain("ratio regrets are defined for T0 = 0"));
    }
    let c = perf_coeffs(0.0, prior, spec)?;
    let ours = unit_gains(0.0, spec.horizon());
    let theirs = GainSchedule::at_remaining(spec.horizon(), spec.fuel_weight());
    Ok(CostRatio {
        num_a2: ours.e0 + c.f0,
        num_0: c.f_sharp,
        den_a2: theirs.e0,
        den_0: theirs.e_sharp,
    })
}

/// Difference between the `a → ∞` limit and the `a = 0` value of the cost
/// ratio. Written as `F0/E0 - (F# - E#)/E#` when untaxed, which avoids
/// subtracting two numbers near one.
pub fn ratio_residual(prior: &GaussianPrior, spec: &ProblemSpec) -> Result<f64> {
    if spec.t_start() != 0.0 {
        return Err(Error::domain("ratio regrets are defined for T0 = 0"));
    }
    let c = perf_coeffs(0.0, prior, spec)?;
    let ours = unit_gains(0.0, spec.horizon());
    if spec.fuel_weight() == 1.0 {
        return Ok(c.f0 / ours.e0 - c.f_sharp_excess / ours.e_sharp);
    }
    let theirs = GainSchedule::at_remaining(spec.horizon(), spec.fuel_weight());
    Ok((ours.e0 + c.f0) / theirs.e0 - c.f_sharp / theirs.e_sharp)
}

/// Multiplicative regret (competitive ratio) for true drift `a`.
pub fn multiplicative_regret(a: f64, prior: &GaussianPrior, spec: &ProblemSpec) -> Result<f64> {
    Ok(cost_ratio(prior, &spec.untaxed())?.eval(a))
}

/// Our untaxed cost over the cost of a known-drift opponent paying fuel
/// weight `lambda_opp`.
pub fn fueltax_ratio(
    a: f64,
    prior: &GaussianPrior,
    lambda_opp: f64,
    spec: &ProblemSpec,
) -> Result<f64> {
    Ok(cost_ratio(prior, &spec.with_fuel_weight(lambda_opp)?)?.eval(a))
}

/// Expected cost over `[T0, T]` of the Bayesian strategy started from the
/// origin, with control forced to zero on `[0, T0)`.
pub fn expected_bayes_cost(a: f64, prior: &GaussianPrior, spec: &ProblemSpec) -> Result<f64> {
    let t0 = spec.t_start();
    let c = perf_coeffs(t0, prior, spec)?;
    let g = unit_gains(t0, spec.horizon());
    Ok(g.e2 * (t0 + a * a * t0 * t0)
        + g.e1 * a * a * t0
        + g.e0 * a * a
        + c.f0 * expected_squared_miss(a, t0, prior)?
        + c.f_sharp)
}

/// Expected cost over `[T0, T]` of the known-drift optimum at the fuel
/// weight in `spec`, started from the origin.
pub fn expected_optimal_cost(a: f64, spec: &ProblemSpec) -> f64 {
    let t0 = spec.t_start();
    let g = GainSchedule::at_remaining(spec.horizon() - t0, spec.fuel_weight());
    // q(T0) ~ N(a T0, T0)
    g.e2 * (t0 + a * a * t0 * t0) + g.e1 * a * a * t0 + g.e0 * a * a + g.e_sharp
}

/// Expected cost over `[T0, T]` of never steering.
pub fn expected_zero_control_cost(a: f64, spec: &ProblemSpec) -> f64 {
    // ∫ E[q²] dt with E[q²] = t + a² t²
    let prim = |t: f64| 0.5 * t * t + a * a * t * t * t / 3.0;
    prim(spec.horizon()) - prim(spec.t_start())
}

/// Expected cost over the whole of `[0, T]` of a Bayesian strategy that stays
/// idle until `delay` and pays for the idle stretch too.
pub fn expected_delayed_cost(
    a: f64,
    prior: &GaussianPrior,
    delay: f64,
    horizon: f64,
) -> Result<f64> {
    let spec = ProblemSpec::new(delay, horizon, 1.0)?;
    let idle = 0.5 * delay * delay + a * a * delay * delay * delay / 3.0;
    Ok(idle + expected_bayes_cost(a, prior, &spec)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretMode {
    Additive,
    Multiplicative,
    FuelTax,
}

/// One drift value of a regret table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretRow {
    pub a: f64,
    pub our_cost: f64,
    pub opponent_cost: f64,
    pub additive: f64,
    pub ratio: f64,
    /// Standard errors, present for Monte Carlo estimates.
    pub our_cost_se: Option<f64>,
    pub additive_se: Option<f64>,
    pub ratio_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub mode: RegretMode,
    /// `None` for strategies that are not Bayesian.
    pub prior: Option<GaussianPrior>,
    pub spec: ProblemSpec,
    pub rows: Vec<RegretRow>,
    /// Analytic `|a| → ∞` limit of the ratio, for the ratio modes.
    pub ratio_limit: Option<f64>,
    pub worst_additive: f64,
    /// Max ratio over the grid and, when known, the `|a| → ∞` limit.
    pub worst_ratio: f64,
    /// Max minus min of the mode's headline column (ratio modes include the
    /// limit).
    pub spread: f64,
}

impl RegretReport {
    pub(crate) fn from_rows(
        mode: RegretMode,
        prior: Option<GaussianPrior>,
        spec: ProblemSpec,
        rows: Vec<RegretRow>,
        ratio_limit: Option<f64>,
    ) -> Self {
        let worst_additive = rows
            .iter()
            .map(|r| r.additive)
            .fold(f64::NEG_INFINITY, f64::max);
        let ratios = rows.iter().map(|r| r.ratio).chain(ratio_limit);
        let worst_ratio = ratios.clone().fold(f64::NEG_INFINITY, f64::max);
        let spread = match mode {
            RegretMode::Additive => {
                let min = rows
                    .iter()
                    .map(|r| r.additive)
                    .fold(f64::INFINITY, f64::min);
                worst_additive - min
            }
            _ => worst_ratio - ratios.fold(f64::INFINITY, f64::min),
        };
        RegretReport {
            mode,
            prior,
            spec,
            rows,
            ratio_limit,
            worst_additive,
            worst_ratio,
            spread,
        }
    }
}

/// Default drift grid, symmetric because every cost depends on `a²`.
pub fn default_a_grid() -> Vec<f64> {
    let pos = [0.25, 0.5, 1.0, 2.0, 5.0, 10.0];
    let mut grid: Vec<f64> = pos.iter().rev().map(|a| -a).collect();
    grid.push(0.0);
    grid.extend_from_slice(&pos);
    grid
}

/// Closed-form regret table for a Bayesian strategy.
///
/// `Additive` plays from `T0 = spec.t_start() > 0` against an untaxed
/// opponent. The ratio modes need `T0 = 0`; `FuelTax` charges the opponent
/// the fuel weight in `spec`, `Multiplicative` ignores it.
pub fn analytic_regret(
    mode: RegretMode,
    prior: &GaussianPrior,
    spec: &ProblemSpec,
    a_grid: &[f64],
) -> Result<RegretReport> {
    let spec = match mode {
        RegretMode::FuelTax => *spec,
        _ => spec.untaxed(),
    };
    let ratio = match mode {
        RegretMode::Additive => None,
        _ => Some(cost_ratio(prior, &spec)?),
    };
    let mut rows = Vec::with_capacity(a_grid.len());
    for &a in a_grid {
        let ours = expected_bayes_cost(a, prior, &spec)?;
        let theirs = expected_optimal_cost(a, &spec);
        let (additive, r) = match mode {
            RegretMode::Additive => (additive_regret(a, prior, &spec)?, ours / theirs),
            RegretMode::Multiplicative => (ours - theirs, multiplicative_regret(a, prior, &spec)?),
            RegretMode::FuelTax => (
                ours - theirs,
                fueltax_ratio(a, prior, spec.fuel_weight(), &spec.untaxed())?,
            ),
        };
        rows.push(RegretRow {
            a,
            our_cost: ours,
            opponent_cost: theirs,
            additive,
            ratio: r,
            our_cost_se: None,
            additive_se: None,
            ratio_se: None,
        });
    }
    Ok(RegretReport::from_rows(
        mode,
        Some(*prior),
        spec,
        rows,
        ratio.map(|c| c.limit()),
    ))
}

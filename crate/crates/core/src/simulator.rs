//! Euler–Maruyama simulation of `dq = (a + u) dt + dW` under a feedback
//! strategy, and Monte Carlo estimates of the expected cost.
//!
//! Each path draws from its own ChaCha8 stream selected by path index, so a
//! Monte Carlo estimate depends only on `(seed, n_paths, dt)` and not on how
//! paths are scheduled across threads.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bayes::{control_bayes, xi_update, ControlState, GaussianPrior};
use crate::error::{Error, Result};
use crate::model::{control_known_a, ProblemSpec};
use crate::performance::{
    expected_bayes_cost, expected_optimal_cost, expected_zero_control_cost, RegretMode,
    RegretReport, RegretRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    ZeroControl,
    KnownA { a: f64 },
    Bayes { prior: GaussianPrior },
}

impl Strategy {
    /// Control at `state`; zero during the observation phase.
    pub fn control(&self, state: &ControlState, spec: &ProblemSpec) -> Result<f64> {
        if state.t < spec.t_start() {
            return Ok(0.0);
        }
        match self {
            Strategy::ZeroControl => Ok(0.0),
            Strategy::KnownA { a } => control_known_a(state.q, state.t, *a, spec),
            Strategy::Bayes { prior } => control_bayes(state, prior, spec),
        }
    }

    pub fn check(&self, spec: &ProblemSpec) -> Result<()> {
        if let Strategy::Bayes {
            prior: GaussianPrior::Improper,
        } = self
        {
            if !(spec.t_start() > 0.0) {
                return Err(Error::singular(
                    "the improper-prior strategy needs an observation phase T0 > 0",
                ));
            }
        }
        Ok(())
    }

    /// Closed-form expected cost over `[T0, T]` from the origin, when one is
    /// available (`KnownA` only when its drift matches `a_true`).
    pub fn analytic_cost(&self, a_true: f64, spec: &ProblemSpec) -> Result<Option<f64>> {
        let spec = spec.untaxed();
        Ok(match self {
            Strategy::ZeroControl => Some(expected_zero_control_cost(a_true, &spec)),
            Strategy::KnownA { a } if *a == a_true => Some(expected_optimal_cost(a_true, &spec)),
            Strategy::KnownA { .. } => None,
            Strategy::Bayes { prior } => Some(expected_bayes_cost(a_true, prior, &spec)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub spec: ProblemSpec,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub a_true: f64,
    /// Cap on `n_paths * steps`.
    pub step_budget: u128,
    /// Keep the per-path costs in the estimate.
    pub keep_samples: bool,
}

impl SimConfig {
    pub const DEFAULT_DT: f64 = 1e-3;
    pub const DEFAULT_PATHS: usize = 10_000;
    pub const DEFAULT_BUDGET: u128 = 1_000_000_000;

    pub fn new(spec: ProblemSpec, a_true: f64, seed: u64) -> Self {
        SimConfig {
            spec,
            dt: Self::DEFAULT_DT,
            n_paths: Self::DEFAULT_PATHS,
            seed,
            a_true,
            step_budget: Self::DEFAULT_BUDGET,
            keep_samples: false,
        }
    }

    /// Number of steps covering `[0, T]`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        let horizon = self.spec.horizon();
        let n = (horizon / self.dt).round();
        if n < 1.0 || ((n * self.dt - horizon).abs() > 1e-9 * horizon.max(1.0)) {
            return Err(Error::InvalidConfig(format!(
                "dt = {} does not divide T = {horizon}",
                self.dt
            )));
        }
        Ok(n as usize)
    }

    fn validate(&self) -> Result<usize> {
        if self.n_paths == 0 {
            return Err(Error::InvalidConfig("n_paths must be at least 1".into()));
        }
        if !self.a_true.is_finite() {
            return Err(Error::InvalidConfig("a_true must be finite".into()));
        }
        let steps = self.steps()?;
        let requested = steps as u128 * self.n_paths as u128;
        if requested > self.step_budget {
            return Err(Error::BudgetExceeded {
                requested,
                budget: self.step_budget,
            });
        }
        Ok(steps)
    }
}

/// Source of standard normal draws driving one path.
pub trait NoiseSource {
    fn standard_normal(&mut self) -> f64;
}

impl NoiseSource for ChaCha8Rng {
    fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }
}

/// All-zero noise: the deterministic skeleton of the dynamics.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn standard_normal(&mut self) -> f64 {
        0.0
    }
}

/// Replays a fixed sequence of draws, then zeros.
#[derive(Debug, Clone)]
pub struct ReplayNoise<I>(pub I);

impl<I: Iterator<Item = f64>> NoiseSource for ReplayNoise<I> {
    fn standard_normal(&mut self) -> f64 {
        self.0.next().unwrap_or(0.0)
    }
}

/// The random stream of path `index` under `seed`.
pub fn path_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub q: f64,
    pub xi: f64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub cost: f64,
    pub final_state: ControlState,
    /// Running `∫ u dt`, kept to check `ξ = q - ∫ u dt`.
    pub control_integral: f64,
    /// One sample per step plus the terminal state (with `u = 0`), when
    /// recorded.
    pub trajectory: Option<Vec<Sample>>,
}

/// Simulate one path from `q = ξ = 0`.
///
/// Control is evaluated at the left end of each step and held over it. Cost
/// `(q² + u²) dt` accrues only on steps starting at or after `T0`.
pub fn simulate_path<N: NoiseSource>(
    strategy: &Strategy,
    config: &SimConfig,
    noise: &mut N,
    record: bool,
) -> Result<PathOutcome> {
    let steps = config.validate()?;
    strategy.check(&config.spec)?;
    run_path(strategy, config, steps, noise, record)
}

fn run_path<N: NoiseSource>(
    strategy: &Strategy,
    config: &SimConfig,
    steps: usize,
    noise: &mut N,
    record: bool,
) -> Result<PathOutcome> {
    let spec = &config.spec;
    let dt = config.dt;
    let sqrt_dt = dt.sqrt();
    let t0 = spec.t_start();
    // first step index that is controlled and charged
    let first = ((t0 / dt) - 1e-9).ceil().max(0.0) as usize;

    let mut state = ControlState::default();
    let mut cost = 0.0;
    let mut control_integral = 0.0;
    let mut trajectory = record.then(|| Vec::with_capacity(steps + 1));

    for k in 0..steps {
        let active = k >= first;
        let t = k as f64 * dt;
        state.t = if active { t.max(t0) } else { t };
        let u = if active {
            strategy.control(&state, spec)?
        } else {
            0.0
        };
        if active {
            cost += (state.q * state.q + u * u) * dt;
        }
        if let Some(tr) = trajectory.as_mut() {
            tr.push(Sample {
                t: state.t,
                q: state.q,
                xi: state.xi,
                u,
            });
        }
        let dq = (config.a_true + u) * dt + sqrt_dt * noise.standard_normal();
        state = xi_update(state, dq, u, dt);
        control_integral += u * dt;
        if !(state.q.is_finite() && state.xi.is_finite() && u.is_finite()) {
            return Err(Error::NonFinite {
                t: state.t,
                q: state.q,
                xi: state.xi,
                u,
            });
        }
    }
    state.t = spec.horizon();
    debug_assert!(
        (state.xi - (state.q - control_integral)).abs() <= 1e-9 * (1.0 + state.q.abs()),
        "sufficient statistic drifted from q - ∫u"
    );
    if let Some(tr) = trajectory.as_mut() {
        tr.push(Sample {
            t: state.t,
            q: state.q,
            xi: state.xi,
            u: 0.0,
        });
    }
    Ok(PathOutcome {
        cost,
        final_state: state,
        control_integral,
        trajectory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

/// Compensated (Neumaier) sum in slice order.
fn stable_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl CostEstimate {
    pub fn from_samples(costs: Vec<f64>, keep: bool) -> Self {
        let n = costs.len();
        let mean = stable_sum(costs.iter().copied()) / n as f64;
        let var = if n > 1 {
            stable_sum(costs.iter().map(|c| (c - mean) * (c - mean))) / (n - 1) as f64
        } else {
            0.0
        };
        CostEstimate {
            mean,
            stderr: (var / n as f64).sqrt(),
            n_paths: n,
            samples: keep.then_some(costs),
        }
    }
}

/// Monte Carlo estimate of the expected cost over `config.n_paths` paths.
pub fn monte_carlo_cost(strategy: &Strategy, config: &SimConfig) -> Result<CostEstimate> {
    let steps = config.validate()?;
    strategy.check(&config.spec)?;
    let costs = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_stream(config.seed, i);
            run_path(strategy, config, steps, &mut rng, false).map(|o| o.cost)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CostEstimate::from_samples(costs, config.keep_samples))
}

/// Monte Carlo regret of `strategy` against the exact known-drift optimum
/// (at the fuel weight in `config.spec`), one row per drift in `a_grid`.
/// Every drift reuses `config.seed`, so rows share their noise paths.
pub fn regret_empirical(
    strategy: &Strategy,
    a_grid: &[f64],
    config: &SimConfig,
) -> Result<RegretReport> {
    let mode = if config.spec.t_start() > 0.0 {
        RegretMode::Additive
    } else if config.spec.fuel_weight() > 1.0 {
        RegretMode::FuelTax
    } else {
        RegretMode::Multiplicative
    };
    let mut rows = Vec::with_capacity(a_grid.len());
    for &a in a_grid {
        let played = match strategy {
            Strategy::KnownA { .. } => Strategy::KnownA { a },
            s => *s,
        };
        let est = monte_carlo_cost(
            &played,
            &SimConfig {
                a_true: a,
                ..*config
            },
        )?;
        let theirs = expected_optimal_cost(a, &config.spec);
        rows.push(RegretRow {
            a,
            our_cost: est.mean,
            opponent_cost: theirs,
            additive: est.mean - theirs,
            ratio: est.mean / theirs,
            our_cost_se: Some(est.stderr),
            additive_se: Some(est.stderr),
            ratio_se: Some(est.stderr / theirs),
        });
    }
    let prior = match strategy {
        Strategy::Bayes { prior } => Some(*prior),
        _ => None,
    };
    Ok(RegretReport::from_rows(
        mode,
        prior,
        config.spec,
        rows,
        None,
    ))
}

/// Write a trajectory as CSV with header `t,q,xi,u`.
pub fn write_trajectory_csv<W: Write>(mut out: W, samples: &[Sample]) -> io::Result<()> {
    writeln!(out, "t,q,xi,u")?;
    for s in samples {
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", s.t, s.q, s.xi, s.u)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(horizon: f64, t0: f64, a: f64) -> SimConfig {
        SimConfig::new(ProblemSpec::new(t0, horizon, 1.0).unwrap(), a, 7)
    }

    #[test]
    fn zero_noise_zero_drift_stays_at_origin() {
        let cfg = config(1.0, 0.0, 0.0);
        for s in [
            Strategy::ZeroControl,
            Strategy::KnownA { a: 0.0 },
            Strategy::Bayes {
                prior: GaussianPrior::new(1.0).unwrap(),
            },
        ] {
            let out = simulate_path(&s, &cfg, &mut ZeroNoise, true).unwrap();
            assert_eq!(out.cost, 0.0);
            assert!(out
                .trajectory
                .unwrap()
                .iter()
                .all(|x| x.q == 0.0 && x.u == 0.0));
        }
    }

    #[test]
    fn zero_noise_drift_is_exact() {
        let mut cfg = config(1.0, 0.0, 2.0);
        cfg.dt = 0.01;
        let out = simulate_path(&Strategy::ZeroControl, &cfg, &mut ZeroNoise, true).unwrap();
        let tr = out.trajectory.unwrap();
        assert_eq!(tr.len(), 101);
        assert!((out.final_state.q - 2.0).abs() < 1e-12);
        // left Riemann sum of (2t)² on a 0.01 grid
        let expect: f64 = (0..100).map(|k| (0.02 * k as f64).powi(2) * 0.01).sum();
        assert!((out.cost - expect).abs() < 1e-12);
    }

    #[test]
    fn observation_phase_is_free_and_idle() {
        let cfg = config(1.0, 1.0, 0.5);
        let s = Strategy::Bayes {
            prior: GaussianPrior::Improper,
        };
        let mut rng = path_stream(3, 0);
        let out = simulate_path(&s, &cfg, &mut rng, true).unwrap();
        assert_eq!(out.cost, 0.0);
        assert!(out.trajectory.unwrap().iter().all(|x| x.u == 0.0));

        let cfg = config(1.0, 0.4, 0.5);
        let mut rng = path_stream(3, 0);
        let tr = simulate_path(&s, &cfg, &mut rng, true)
            .unwrap()
            .trajectory
            .unwrap();
        assert!(tr
            .iter()
            .filter(|x| x.t < 0.4 - 1e-9)
            .all(|x| x.u == 0.0 && x.xi == x.q));
        assert!(tr.iter().any(|x| x.u != 0.0));
    }

    #[test]
    fn improper_strategy_needs_observation() {
        let cfg = config(1.0, 0.0, 0.0);
        let s = Strategy::Bayes {
            prior: GaussianPrior::Improper,
        };
        assert!(matches!(
            simulate_path(&s, &cfg, &mut ZeroNoise, false),
            Err(Error::Singularity(_))
        ));
        assert!(matches!(
            monte_carlo_cost(&s, &cfg),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(1.0, 0.0, 0.0);
        cfg.dt = 0.3;
        assert!(matches!(cfg.steps(), Err(Error::InvalidConfig(_))));
        cfg.dt = 1e-3;
        cfg.n_paths = 0;
        assert!(matches!(
            monte_carlo_cost(&Strategy::ZeroControl, &cfg),
            Err(Error::InvalidConfig(_))
        ));
        cfg.n_paths = 2_000_000;
        assert!(matches!(
            monte_carlo_cost(&Strategy::ZeroControl, &cfg),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn estimate_statistics() {
        let est = CostEstimate::from_samples(vec![1.0, 2.0, 3.0, 4.0], true);
        assert_eq!(est.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((est.stderr - sd / 2.0).abs() < 1e-15);
        assert_eq!(est.samples.as_deref(), Some(&[1.0, 2.0, 3.0, 4.0][..]));
    }

    #[test]
    fn trajectory_csv_header() {
        let mut buf = Vec::new();
        write_trajectory_csv(
            &mut buf,
            &[Sample {
                t: 0.0,
                q: 1.0,
                xi: 1.0,
                u: -0.5,
            }],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,q,xi,u"));
        assert_eq!(
            lines.next(),
            Some("0.0000000000000000e0,1.0000000000000000e0,1.0000000000000000e0,-5.0000000000000000e-1")
        );
    }
}

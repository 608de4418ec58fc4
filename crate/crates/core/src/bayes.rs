//! Gaussian-prior filtering of the drift and the Bayesian control law.
//!
//! The whole observation history enters the posterior on `a` only through
//! `ξ(t) = q(t) - q(0) - ∫ u dτ`. Under a mean-zero prior with precision
//! `p = σ⁻²` the posterior is Gaussian with mean `ξ / (t + p)` and variance
//! `1 / (t + p)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{GainSchedule, ProblemSpec};

/// Mean-zero Gaussian prior on the drift, or its flat `σ → ∞` limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaussianPrior {
    Proper { sigma: f64 },
    Improper,
}

impl GaussianPrior {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && sigma > 0.0 {
            Ok(GaussianPrior::Proper { sigma })
        } else if sigma == f64::INFINITY {
            Ok(GaussianPrior::Improper)
        } else {
            Err(Error::domain(format!(
                "prior sigma must be positive, got {sigma}"
            )))
        }
    }

    /// `σ⁻²`, zero for the improper prior.
    pub fn precision(&self) -> f64 {
        match *self {
            GaussianPrior::Proper { sigma } => 1.0 / (sigma * sigma),
            GaussianPrior::Improper => 0.0,
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            GaussianPrior::Proper { sigma } => sigma,
            GaussianPrior::Improper => f64::INFINITY,
        }
    }

    pub fn is_improper(&self) -> bool {
        matches!(self, GaussianPrior::Improper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ControlState {
    pub q: f64,
    pub xi: f64,
    pub t: f64,
}

impl ControlState {
    pub fn new(q: f64, xi: f64, t: f64) -> Self {
        ControlState { q, xi, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Posterior {
    pub mean: f64,
    pub variance: f64,
}

/// Advance the state by one observed increment `dq` under control `u`.
pub fn xi_update(state: ControlState, dq: f64, u: f64, dt: f64) -> ControlState {
    debug_assert!(dt > 0.0, "dt must be positive");
    ControlState {
        q: state.q + dq,
        xi: state.xi + dq - u * dt,
        t: state.t + dt,
    }
}

pub fn posterior(state: &ControlState, prior: &GaussianPrior) -> Result<Posterior> {
    let info = state.t + prior.precision();
    if !(info > 0.0) {
        return Err(Error::singular(format!(
            "posterior undefined at t = {} (improper prior needs t > 0)",
            state.t
        )));
    }
    Ok(Posterior {
        mean: state.xi / info,
        variance: 1.0 / info,
    })
}

/// Bayesian control: the known-drift law with `a` replaced by the posterior
/// mean.
pub fn control_bayes(
    state: &ControlState,
    prior: &GaussianPrior,
    spec: &ProblemSpec,
) -> Result<f64> {
    spec.check_control_time(state.t)?;
    let mean = posterior(state, prior)?.mean;
    Ok(GainSchedule::at_remaining(spec.horizon() - state.t, 1.0).feedback(state.q, mean))
}

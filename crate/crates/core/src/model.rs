//! Known-drift control: gain schedules, value function and feedback law.
//!
//! With the drift `a` known, the expected cost-to-go of the optimally
//! controlled system is the quadratic
//!
//! ```text
//! J(q, t; a) = E2(t) q² + E1(t) q a + E0(t) a² + E#(t)
//! ```
//!
//! whose coefficients solve a backward Riccati-type system with zero terminal
//! values. For fuel weight `λ` and rescaled remaining time
//! `s = (T - t) / √λ` the solution is
//!
//! ```text
//! E2 = √λ tanh s      E1 = 2λ (1 - sech s)
//! E0 = λ^{3/2} (s - tanh s)      E# = λ log cosh s
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{log_cosh, one_minus_sech, x_minus_tanh};

/// Horizon and cost configuration.
///
/// Control is forced to zero on `[0, t_start)`; cost accrues on
/// `[t_start, horizon]`. The noise intensity is normalized to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemSpec {
    t_start: f64,
    horizon: f64,
    fuel_weight: f64,
}

impl ProblemSpec {
    pub const NOISE_SCALE: f64 = 1.0;

    pub fn new(t_start: f64, horizon: f64, fuel_weight: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::domain(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if !(t_start.is_finite() && t_start >= 0.0 && t_start <= horizon) {
            return Err(Error::domain(format!(
                "t_start must lie in [0, horizon = {horizon}], got {t_start}"
            )));
        }
        if !(fuel_weight.is_finite() && fuel_weight >= 1.0) {
            return Err(Error::domain(format!(
                "fuel_weight must be >= 1, got {fuel_weight}"
            )));
        }
        Ok(ProblemSpec {
            t_start,
            horizon,
            fuel_weight,
        })
    }

    /// `t_start = 0`, `λ = 1`.
    pub fn with_horizon(horizon: f64) -> Result<Self> {
        Self::new(0.0, horizon, 1.0)
    }

    pub fn with_t_start(self, t_start: f64) -> Result<Self> {
        Self::new(t_start, self.horizon, self.fuel_weight)
    }

    pub fn with_fuel_weight(self, fuel_weight: f64) -> Result<Self> {
        Self::new(self.t_start, self.horizon, fuel_weight)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn fuel_weight(&self) -> f64 {
        self.fuel_weight
    }

    /// The same horizon with the fuel weight reset to one.
    pub fn untaxed(&self) -> Self {
        ProblemSpec {
            fuel_weight: 1.0,
            ..*self
        }
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::domain(format!(
                "t must lie in [0, T = {}], got {t}",
                self.horizon
            )));
        }
        Ok(())
    }

    pub(crate) fn check_control_time(&self, t: f64) -> Result<()> {
        if !(t >= self.t_start && t <= self.horizon) {
            return Err(Error::domain(format!(
                "control time must lie in [T0 = {}, T = {}], got {t}",
                self.t_start, self.horizon
            )));
        }
        Ok(())
    }
}

/// Coefficients of the quadratic value function at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainSchedule {
    pub e2: f64,
    pub e1: f64,
    pub e0: f64,
    pub e_sharp: f64,
}

impl GainSchedule {
    /// Gains with `remaining = T - t` left on the clock.
    pub fn at_remaining(remaining: f64, fuel_weight: f64) -> Self {
        let root = fuel_weight.sqrt();
        let s = remaining / root;
        GainSchedule {
            e2: root * s.tanh(),
            e1: 2.0 * fuel_weight * one_minus_sech(s),
            e0: fuel_weight * root * x_minus_tanh(s),
            e_sharp: fuel_weight * log_cosh(s),
        }
    }

    pub fn value(&self, q: f64, a: f64) -> f64 {
        self.e2 * q * q + self.e1 * q * a + self.e0 * a * a + self.e_sharp
    }

    /// Feedback `-E2 q - (E1/2) a`. Only meaningful for untaxed gains.
    pub fn feedback(&self, q: f64, a: f64) -> f64 {
        -self.e2 * q - 0.5 * self.e1 * a
    }
}

/// Gains at time `t` for the fuel weight in `spec`.
pub fn gains(t: f64, spec: &ProblemSpec) -> Result<GainSchedule> {
    spec.check_time(t)?;
    Ok(GainSchedule::at_remaining(
        spec.horizon - t,
        spec.fuel_weight,
    ))
}

/// Optimal expected cost-to-go from `(q, t)` when the drift is `a`.
pub fn value_known_a(q: f64, t: f64, a: f64, spec: &ProblemSpec) -> Result<f64> {
    Ok(gains(t, spec)?.value(q, a))
}

/// Optimal control for known `a`. Always uses untaxed gains.
pub fn control_known_a(q: f64, t: f64, a: f64, spec: &ProblemSpec) -> Result<f64> {
    spec.check_control_time(t)?;
    Ok(GainSchedule::at_remaining(spec.horizon - t, 1.0).feedback(q, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    // 40-digit evaluations of the closed forms at s = 1.
    const TANH_1: f64 = 0.761_594_155_955_764_888_1;
    const TWO_ONE_MINUS_SECH_1: f64 = 0.703_891_452_672_229_200_9;
    const ONE_MINUS_TANH_1: f64 = 0.238_405_844_044_235_111_9;
    const LOG_COSH_1: f64 = 0.433_780_830_483_027_187_0;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn terminal_gains_vanish() {
        for lam in [1.0, 2.5, 9.0] {
            let spec = ProblemSpec::new(0.0, 3.0, lam).unwrap();
            let g = gains(3.0, &spec).unwrap();
            assert_eq!(
                g,
                GainSchedule {
                    e2: 0.0,
                    e1: 0.0,
                    e0: 0.0,
                    e_sharp: 0.0
                }
            );
        }
    }

    #[test]
    fn unit_horizon_gains() {
        let spec = ProblemSpec::with_horizon(1.0).unwrap();
        let g = gains(0.0, &spec).unwrap();
        assert!(close(g.e2, TANH_1, 1e-15));
        assert!(close(g.e1, TWO_ONE_MINUS_SECH_1, 1e-15));
        assert!(close(g.e0, ONE_MINUS_TANH_1, 1e-14));
        assert!(close(g.e_sharp, LOG_COSH_1, 1e-15));
    }

    #[test]
    fn taxed_gains_rescale() {
        let spec = ProblemSpec::new(0.0, 2.0, 4.0).unwrap();
        let g = gains(0.0, &spec).unwrap();
        assert!(close(g.e2, 2.0 * TANH_1, 1e-15));
        assert!(close(g.e1, 4.0 * TWO_ONE_MINUS_SECH_1, 1e-15));
        assert!(close(g.e0, 8.0 * ONE_MINUS_TANH_1, 1e-14));
        assert!(close(g.e_sharp, 4.0 * LOG_COSH_1, 1e-15));
    }

    #[test]
    fn value_examples() {
        let spec = ProblemSpec::with_horizon(1.0).unwrap();
        assert_eq!(value_known_a(3.0, 1.0, -2.0, &spec).unwrap(), 0.0);
        assert!(close(
            value_known_a(0.0, 0.0, 0.0, &spec).unwrap(),
            LOG_COSH_1,
            1e-15
        ));
        let v = value_known_a(0.0, 0.0, 1.0, &spec).unwrap();
        assert!(close(v, 0.672_186_674_527_262_298_9, 1e-15));
    }

    #[test]
    fn control_examples() {
        let spec = ProblemSpec::with_horizon(1.0).unwrap();
        assert_eq!(control_known_a(0.0, 0.4, 0.0, &spec).unwrap(), 0.0);
        assert_eq!(control_known_a(1.0, 1.0, 5.0, &spec).unwrap(), 0.0);
        let u = control_known_a(1.0, 0.0, 1.0, &spec).unwrap();
        assert!(close(u, -1.113_539_882_291_879_488_5, 1e-15));
    }

    #[test]
    fn control_ignores_fuel_weight() {
        let taxed = ProblemSpec::new(0.0, 1.0, 3.0).unwrap();
        let plain = taxed.untaxed();
        assert_eq!(
            control_known_a(0.7, 0.2, -1.3, &taxed).unwrap(),
            control_known_a(0.7, 0.2, -1.3, &plain).unwrap()
        );
    }

    #[test]
    fn domain_errors() {
        let spec = ProblemSpec::new(0.5, 1.0, 1.0).unwrap();
        assert!(matches!(gains(1.5, &spec), Err(Error::Domain(_))));
        assert!(matches!(gains(-0.1, &spec), Err(Error::Domain(_))));
        assert!(matches!(
            value_known_a(0.0, 2.0, 0.0, &spec),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            control_known_a(0.0, 0.2, 0.0, &spec),
            Err(Error::Domain(_))
        ));
        assert!(ProblemSpec::new(0.0, 0.0, 1.0).is_err());
        assert!(ProblemSpec::new(2.0, 1.0, 1.0).is_err());
        assert!(ProblemSpec::new(0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn long_horizon_is_finite() {
        let spec = ProblemSpec::with_horizon(1.0e4).unwrap();
        let g = gains(0.0, &spec).unwrap();
        assert!(g.e2.is_finite() && g.e1.is_finite() && g.e0.is_finite());
        assert!(close(g.e_sharp, 1.0e4 - std::f64::consts::LN_2, 1e-14));
    }
}

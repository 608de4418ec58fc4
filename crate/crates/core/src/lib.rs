//! Optimal control of the scalar system `dq = (a + u) dt + dW` when the
//! drift `a` may be unknown.
//!
//! The crate covers four layers:
//!
//! * [`model`]: closed-form gain schedules and the optimal control when `a`
//!   is known, for any fuel weight `λ`.
//! * [`bayes`]: the Gaussian-prior filter (sufficient statistic `ξ`,
//!   posterior mean and variance) and the Bayesian control law, including the
//!   improper flat prior.
//! * [`performance`] and [`solvers`]: expected cost of the Bayesian strategy
//!   for a fixed true drift, the additive / multiplicative / fuel-tax regret
//!   functionals, and the root finders that pick the prior width making the
//!   regret independent of `a`.
//! * [`simulator`]: Euler–Maruyama Monte Carlo of the closed loop, used as an
//!   empirical check of every analytic cost.

// `!(x > 0.0)` is deliberate: it also rejects NaN. Constants keep all the
// digits they were published or computed with.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bayes;
pub mod error;
pub mod model;
pub mod performance;
pub mod quadrature;
pub mod roots;
pub mod simulator;
pub mod solvers;
mod special;

pub use bayes::{control_bayes, posterior, xi_update, ControlState, GaussianPrior, Posterior};
pub use error::{Error, Result};
pub use model::{control_known_a, gains, value_known_a, GainSchedule, ProblemSpec};
pub use performance::{
    additive_regret, analytic_regret, bayes_cost, fueltax_ratio, multiplicative_regret,
    perf_coeffs, perf_coeffs_ode, PerfCoeffs, RegretReport, RegretRow,
};
pub use simulator::{
    monte_carlo_cost, regret_empirical, simulate_path, CostEstimate, SimConfig, Strategy,
};
pub use solvers::{
    solve_fueltax, solve_sigma_mr, sweep, worst_case_mr, FuelTaxSolution, SweepQuantity, SweepTable,
};

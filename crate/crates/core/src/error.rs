use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The improper prior was evaluated where its posterior is undefined or a
    /// cost integral diverges.
    #[error("singularity: {0}")]
    Singularity(String),

    #[error("quadrature did not reach tolerance: estimated error {error:.3e} > requested {requested:.3e} after {intervals} subintervals")]
    Quadrature {
        error: f64,
        requested: f64,
        intervals: usize,
    },

    /// The residual kept one sign over the whole scan.
    #[error("no root: {message}")]
    NoRoot {
        message: String,
        /// `(abscissa, residual)` pairs of the sign scan.
        scan: Vec<(f64, f64)>,
    },

    #[error(
        "root finder did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    /// A solved root failed its independent re-check.
    #[error("certification failed: {0}")]
    Certification(String),

    #[error("step budget exceeded: {requested} steps requested, budget is {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },

    #[error("non-finite state at t = {t}: q = {q}, xi = {xi}, u = {u}")]
    NonFinite { t: f64, q: f64, xi: f64, u: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn singular(msg: impl Into<String>) -> Self {
        Error::Singularity(msg.into())
    }
}

//! Bracketed Newton iteration with bisection fallback.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveResult {
    pub root: f64,
    pub residual: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Bisect until the bracket is at most this wide, then switch to Newton.
    pub bracket_width: f64,
    /// Stop once `|f(x)| <= residual_tol`.
    pub residual_tol: f64,
    /// Finite-difference step relative to `max(|x|, 1)`.
    pub diff_step: f64,
    pub max_iterations: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            bracket_width: 1e-2,
            residual_tol: 1e-9,
            diff_step: 1e-6,
            max_iterations: 200,
        }
    }
}

/// Find a zero of `f` on `[lo, hi]`, where `f(lo)` and `f(hi)` have opposite
/// signs (or one of them is zero).
///
/// Bisects down to `opts.bracket_width`, then takes Newton steps with a
/// forward-differenced derivative. A Newton iterate that leaves the current
/// bracket is replaced by the bracket midpoint. Every evaluation shrinks the
/// bracket by sign.
pub fn bracketed_newton<F>(mut f: F, lo: f64, hi: f64, opts: NewtonOptions) -> Result<SolveResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    let mut iterations = 0;

    let done = |x: f64, fx: f64, it: usize, lo: f64, hi: f64| SolveResult {
        root: x,
        residual: fx,
        iterations: it,
        bracket: (lo, hi),
        converged: true,
    };
    if f_lo.abs() <= opts.residual_tol {
        return Ok(done(lo, f_lo, 0, lo, hi));
    }
    if f_hi.abs() <= opts.residual_tol {
        return Ok(done(hi, f_hi, 0, lo, hi));
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoRoot {
            message: format!("residual has one sign on [{lo}, {hi}]"),
            scan: vec![(lo, f_lo), (hi, f_hi)],
        });
    }

    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x)?;
    let mut best = (x, fx);
    while iterations < opts.max_iterations {
        iterations += 1;
        if fx.abs() <= opts.residual_tol {
            return Ok(done(x, fx, iterations, lo, hi));
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }

        let mut next = 0.5 * (lo + hi);
        if hi - lo <= opts.bracket_width {
            let h = opts.diff_step * x.abs().max(1.0);
            let slope = (f(x + h)? - fx) / h;
            let newton = x - fx / slope;
            if slope != 0.0 && newton.is_finite() && newton > lo && newton < hi {
                next = newton;
            }
        }
        if next == x || next <= lo || next >= hi {
            // bracket exhausted in floating point
            if hi - lo <= f64::EPSILON * x.abs().max(1.0) * 4.0 {
                break;
            }
            next = 0.5 * (lo + hi);
        }
        x = next;
        fx = f(x)?;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
    }
    if best.1.abs() <= opts.residual_tol {
        return Ok(done(best.0, best.1, iterations, lo, hi));
    }
    Err(Error::NonConvergence {
        iterations,
        residual: best.1,
    })
}

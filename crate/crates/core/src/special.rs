//! Overflow- and cancellation-safe hyperbolic helpers.

use std::f64::consts::LN_2;

/// `log(cosh x)` without overflow for large `|x|`.
pub(crate) fn log_cosh(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.5 {
        // cosh x - 1 = 2 sinh²(x/2)
        let h = (0.5 * ax).sinh();
        (2.0 * h * h).ln_1p()
    } else {
        ax - LN_2 + (-2.0 * ax).exp().ln_1p()
    }
}

pub(crate) fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// `1 - sech x`, accurate near zero.
pub(crate) fn one_minus_sech(x: f64) -> f64 {
    if x.abs() < 1.0 {
        let h = (0.5 * x).sinh();
        2.0 * h * h * sech(x)
    } else {
        1.0 - sech(x)
    }
}

/// `x - tanh x`, accurate near zero.
pub(crate) fn x_minus_tanh(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // odd Taylor series of x - tanh x
        const C: [f64; 6] = [
            1.0 / 3.0,
            -2.0 / 15.0,
            17.0 / 315.0,
            -62.0 / 2835.0,
            1382.0 / 155_925.0,
            -21_844.0 / 6_081_075.0,
        ];
        let x2 = x * x;
        let poly = C.iter().rev().fold(0.0, |acc, c| acc * x2 + c);
        x * x2 * poly
    } else {
        x - x.tanh()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_cosh_large_argument() {
        let v = log_cosh(1.0e4);
        assert!((v - (1.0e4 - LN_2)).abs() < 1e-9);
        assert_eq!(log_cosh(-3.0), log_cosh(3.0));
    }

    #[test]
    fn branches_meet() {
        for &(f, x) in &[
            (log_cosh as fn(f64) -> f64, 0.5),
            (one_minus_sech as fn(f64) -> f64, 1.0),
            (x_minus_tanh as fn(f64) -> f64, 0.1),
        ] {
            let lo = f(x * (1.0 - 1e-12));
            let hi = f(x * (1.0 + 1e-12));
            assert!((lo - hi).abs() <= 1e-11 * hi.abs(), "{x}: {lo} vs {hi}");
        }
    }

    #[test]
    fn small_argument_series() {
        let x: f64 = 1e-3;
        assert!((x_minus_tanh(x) / (x * x * x / 3.0) - 1.0).abs() < 1e-6);
        assert!((one_minus_sech(x) / (x * x / 2.0) - 1.0).abs() < 1e-6);
        assert!((log_cosh(x) / (x * x / 2.0) - 1.0).abs() < 1e-6);
    }
}

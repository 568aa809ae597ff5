//! Exponential integral `E1(x) = int_x^inf e^{-t}/t dt` for `x > 0`, and
//! `Ei(x) = -E1(-x)` for `x < 0`.
//!
//! Power series for `x <= 1`, modified Lentz evaluation of the continued
//! fraction for `x > 1`. Only `exp` and `ln` from the host math library are
//! used.

use crate::error::{EsrError, Result};
use crate::scalar::Real;

/// Euler-Mascheroni constant to 20 significant digits.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// Series/continued-fraction switch point.
pub const CROSSOVER: f64 = 1.0;

/// Above this argument `E1` underflows in `f64` and is reported as zero.
pub const UNDERFLOW_ARG: f64 = 740.0;

const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpIntResult<T> {
    pub value: T,
    /// Estimated relative error of `value`.
    pub est_rel_error: T,
    /// The true value is positive but below the representable range.
    pub underflow: bool,
}

impl<T: Real> ExpIntResult<T> {
    fn new(value: T, est_rel_error: T) -> Self {
        Self {
            value,
            est_rel_error,
            underflow: false,
        }
    }
}

/// `E1(x)` for `x > 0`.
pub fn exp_int_e1<T: Real>(x: T) -> Result<ExpIntResult<T>> {
    check_positive("exp_int_e1", x)?;
    if x > T::lit(UNDERFLOW_ARG) {
        return Ok(ExpIntResult {
            value: T::zero(),
            est_rel_error: T::one(),
            underflow: true,
        });
    }
    if x <= T::lit(CROSSOVER) {
        Ok(series(x))
    } else {
        let scaled = continued_fraction(x)?;
        let value = scaled.value * (-x).exp();
        Ok(ExpIntResult {
            value,
            est_rel_error: scaled.est_rel_error + T::epsilon() * (T::one() + x * T::epsilon()),
            underflow: value == T::zero(),
        })
    }
}

/// `e^x E1(x)` for `x > 0`, finite for every positive `x`.
///
/// Use this wherever `E1` is multiplied by a growing exponential.
pub fn exp_int_e1_scaled<T: Real>(x: T) -> Result<ExpIntResult<T>> {
    check_positive("exp_int_e1_scaled", x)?;
    if x <= T::lit(CROSSOVER) {
        let r = series(x);
        Ok(ExpIntResult::new(
            r.value * x.exp(),
            r.est_rel_error + T::epsilon(),
        ))
    } else {
        continued_fraction(x)
    }
}

/// `Ei(x)` for `x < 0`; always negative.
pub fn exp_int_ei_neg<T: Real>(x: T) -> Result<ExpIntResult<T>> {
    if !(x < T::zero()) {
        return Err(EsrError::Domain {
            function: "exp_int_ei_neg",
            x: x.as_f64(),
        });
    }
    let r = exp_int_e1(-x)?;
    Ok(ExpIntResult {
        value: -r.value,
        ..r
    })
}

fn check_positive<T: Real>(function: &'static str, x: T) -> Result<()> {
    if x > T::zero() && !x.is_nan() {
        Ok(())
    } else {
        Err(EsrError::Domain {
            function,
            x: x.as_f64(),
        })
    }
}

/// `-gamma - ln x + sum_{m>=1} (-1)^{m+1} x^m / (m m!)`.
pub(crate) fn series<T: Real>(x: T) -> ExpIntResult<T> {
    let eps = T::epsilon();
    let gamma = T::lit(EULER_GAMMA);
    let log_x = x.ln();
    let mut sum = T::zero();
    let mut abs_sum = T::zero();
    // x^m / m! with alternating sign
    let mut power = T::one();
    let mut last = T::zero();
    for m in 1..=MAX_ITER {
        let mf = T::from_count(m);
        power = -power * x / mf;
        let term = -power / mf;
        sum += term;
        abs_sum += term.abs();
        last = term;
        if term.abs() <= eps * sum.abs() * T::lit(0.25) {
            break;
        }
    }
    let value = sum - gamma - log_x;
    let magnitude = gamma + log_x.abs() + abs_sum;
    let err = (T::lit(2.0) * eps * magnitude + last.abs()) / value.abs();
    ExpIntResult::new(value, err)
}

/// `e^x E1(x)` by the continued fraction
/// `1/(x+1- 1/(x+3- 4/(x+5- ...)))`, evaluated with modified Lentz.
pub(crate) fn continued_fraction<T: Real>(x: T) -> Result<ExpIntResult<T>> {
    let eps = T::epsilon();
    let tiny = T::min_positive_value() / eps;
    let two = T::lit(2.0);
    let mut b = x + T::one();
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let ii = T::from_count(i);
        let an = -ii * ii;
        b += two;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let del = c * d;
        h *= del;
        let change = (del - T::one()).abs();
        if change <= eps {
            let iters = T::from_count(i);
            return Ok(ExpIntResult::new(h, change + two * eps + iters.sqrt() * eps));
        }
    }
    Err(EsrError::NoConvergence {
        function: "exp_int_e1",
        iterations: MAX_ITER,
        x: x.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values from 30-digit quadrature of int_x^inf e^-t/t dt.
    const E1_1: f64 = 0.219_383_934_395_520_27;
    const E1_2: f64 = 0.048_900_510_708_061_12;

    #[test]
    fn e1_reference_points() {
        let r = exp_int_e1(1.0_f64).unwrap();
        assert!(rel(r.value, E1_1) < 1e-14, "{}", r.value);
        assert!(r.est_rel_error <= 1e-12);
        let r = exp_int_e1(2.0_f64).unwrap();
        assert!(rel(r.value, E1_2) < 1e-14, "{}", r.value);
        assert!((exp_int_e1(1.0_f64).unwrap().value - 0.219_383_934_395_520).abs() < 1e-15);
        assert!((exp_int_e1(2.0_f64).unwrap().value - 0.048_900_510_708_061).abs() < 1e-15);
    }

    #[test]
    fn e1_small_argument_limit() {
        let x = 1e-6_f64;
        let v = exp_int_e1(x).unwrap().value;
        assert!((v + x.ln() + EULER_GAMMA).abs() < 2e-6);
    }

    #[test]
    fn ei_negative() {
        let v = exp_int_ei_neg(-1.0_f64).unwrap().value;
        assert!((v + 0.219_383_934_395_520).abs() < 1e-15);
        let v = exp_int_ei_neg(-2.0_f64).unwrap().value;
        assert!((v + 0.048_900_510_708_061).abs() < 1e-15);
        for &x in &[-1e-8, -0.3, -5.0, -90.0, -700.0] {
            assert!(exp_int_ei_neg(x).unwrap().value < 0.0);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(exp_int_e1(0.0_f64), Err(EsrError::Domain { .. })));
        assert!(exp_int_e1(-1.0_f64).is_err());
        assert!(exp_int_e1(f64::NAN).is_err());
        assert!(exp_int_ei_neg(0.0_f64).is_err());
        assert!(exp_int_ei_neg(2.0_f64).is_err());
        assert!(exp_int_e1_scaled(0.0_f64).is_err());
    }

    #[test]
    fn underflow_is_reported_not_an_error() {
        let r = exp_int_e1(800.0_f64).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.underflow);
        let r = exp_int_e1(700.0_f64).unwrap();
        assert!(r.value > 0.0 && !r.underflow);
        assert!(r.est_rel_error <= 1e-12);
    }

    #[test]
    fn branches_agree_at_crossover() {
        for &x in &[0.9_f64, 1.0, 1.1] {
            let s = series(x);
            let cf = continued_fraction(x).unwrap();
            let cf_value = cf.value * (-x).exp();
            assert!(rel(s.value, cf_value) < 1e-12, "x={x}: {} vs {}", s.value, cf_value);
        }
    }

    #[test]
    fn error_estimate_within_budget() {
        let mut x = 1e-8_f64;
        while x <= 700.0 {
            let r = exp_int_e1(x).unwrap();
            assert!(r.est_rel_error <= 1e-12, "x={x}: {}", r.est_rel_error);
            x *= 1.37;
        }
    }

    #[test]
    fn sandwich_bound() {
        let n = 200;
        for i in 0..=n {
            let x = 100f64.powf(i as f64 / n as f64);
            let v = exp_int_e1(x).unwrap().value;
            let e = (-x).exp();
            assert!(e / (x + 1.0) < v && v < e / x, "x={x}");
        }
    }

    #[test]
    fn scaled_matches_unscaled() {
        for &x in &[1e-5_f64, 0.5, 1.0, 3.0, 40.0, 300.0] {
            let s = exp_int_e1_scaled(x).unwrap().value;
            let u = exp_int_e1(x).unwrap().value * x.exp();
            assert!(rel(s, u) < 1e-13, "x={x}");
        }
        // finite where E1 itself underflows; e^x E1(x) ~ 1/x (1 - 1/x + 2/x^2)
        let x = 1e6_f64;
        let s = exp_int_e1_scaled(x).unwrap().value;
        let asym = (1.0 - 1.0 / x + 2.0 / (x * x)) / x;
        assert!(rel(s, asym) < 1e-15);
    }

    #[test]
    fn monotone_decreasing() {
        let mut prev = f64::INFINITY;
        let mut x = 1e-7_f64;
        while x < 600.0 {
            let v = exp_int_e1(x).unwrap().value;
            assert!(v < prev);
            prev = v;
            x *= 1.05;
        }
    }

    #[test]
    fn single_precision() {
        let v = exp_int_e1(1.0_f32).unwrap().value;
        assert!(((v as f64) - E1_1).abs() / E1_1 < 2e-6);
        let v = exp_int_e1(2.0_f32).unwrap().value;
        assert!(((v as f64) - E1_2).abs() / E1_2 < 2e-6);
        let v = exp_int_e1(30.0_f32).unwrap().value;
        assert!(v > 0.0);
    }
}

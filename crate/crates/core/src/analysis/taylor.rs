use std::f64::consts::TAU;

use num_rational::BigRational;
use serde::Serialize;

use super::exact::ExactRational;
use crate::error::{Error, Result};

/// Number of terms in the truncated series.
pub const TERMS: u32 = 20;

fn check_domain(x: f64) -> Result<()> {
    if !x.is_finite() || x.abs() > TAU {
        return Err(Error::Parameter(format!("{x} outside [-2π, 2π]")));
    }
    Ok(())
}

/// Σ_{n=1}^{20} (−1)^{n+1} 2^{2n−1} x^{2n} / (2n)!, a lower bound on sin²x.
pub fn taylor_sin2_lower(x: f64) -> Result<f64> {
    check_domain(x)?;
    let x2 = x * x;
    let mut term = x2;
    let mut sum = 0.0;
    for n in 1..=TERMS {
        sum += term;
        let k = f64::from(n);
        term *= -4.0 * x2 / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
    }
    Ok(sum)
}

/// Evidence that sin²x exceeds the truncated series at `x`.
///
/// The difference equals the alternating tail Σ_{n≥21}, whose first term is
/// positive. When the terms decrease from n = 21 on, the tail is bounded
/// below by `a_21 − a_22 = a_21 (1 − 4x²/(43·44))`, so positivity reduces to
/// the ratio test `4x² < 43·44`, checked in exact arithmetic.
#[derive(Debug, Clone, Serialize)]
pub struct TaylorGap {
    pub x: f64,
    /// `sin²x − bound` in floating point; unreliable once below ~1e−15.
    pub float_gap: f64,
    /// Tail Σ_{n=21}^{60} evaluated in floating point.
    pub tail: f64,
    /// `a_21 − a_22` in floating point, for display.
    pub certified_lower: f64,
    /// True when the tail is provably positive.
    pub strict: bool,
    /// True when x = 0 and both sides vanish.
    pub equality: bool,
}

pub fn taylor_gap(x: f64) -> Result<TaylorGap> {
    check_domain(x)?;
    let bound = taylor_sin2_lower(x)?;
    let float_gap = x.sin().powi(2) - bound;
    let x2 = x * x;
    let mut term = x2;
    for n in 1..=TERMS {
        let k = f64::from(n);
        term *= -4.0 * x2 / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
    }
    let mut tail = 0.0;
    for n in TERMS + 1..=60 {
        tail += term;
        let k = f64::from(n);
        term *= -4.0 * x2 / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
    }
    if x == 0.0 {
        return Ok(TaylorGap {
            x,
            float_gap,
            tail: 0.0,
            certified_lower: 0.0,
            strict: false,
            equality: bound == 0.0 && x.sin() == 0.0,
        });
    }
    let xr = ExactRational::from_f64(x)?.as_big().clone();
    let n = i64::from(TERMS + 1);
    let ratio_bound = BigRational::from_integer(((2 * n + 1) * (2 * n + 2)).into());
    // The ratio a_{k+1}/a_k = 4x²/((2k+1)(2k+2)) is largest at k = 21.
    let strict = &xr * &xr * BigRational::from_integer(4.into()) < ratio_bound;
    let a21 = (1..=2 * TERMS + 2).fold(2f64.powi(2 * n as i32 - 1), |acc, i| {
        acc * x.abs() / f64::from(i)
    });
    let lower = a21 * (1.0 - 4.0 * x2 / ((2 * n + 1) * (2 * n + 2)) as f64);
    Ok(TaylorGap {
        x,
        float_gap,
        tail,
        certified_lower: lower,
        strict,
        equality: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_is_equality() {
        assert_eq!(taylor_sin2_lower(0.0).unwrap(), 0.0);
        let g = taylor_gap(0.0).unwrap();
        assert!(g.equality && !g.strict);
    }

    #[test]
    fn half_pi() {
        let v = taylor_sin2_lower(FRAC_PI_2).unwrap();
        assert!(v < 1.0 || taylor_gap(FRAC_PI_2).unwrap().strict);
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn near_two_pi_gap_visible_in_floats() {
        let g = taylor_gap(6.2).unwrap();
        assert!(g.strict);
        assert!(g.float_gap > 1e-7);
        assert!((g.float_gap - g.tail).abs() < 1e-9);
    }

    #[test]
    fn domain() {
        assert!(taylor_sin2_lower(7.0).is_err());
        assert!(taylor_sin2_lower(f64::NAN).is_err());
    }
}

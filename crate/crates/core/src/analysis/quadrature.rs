use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::povm_density;

/// Default absolute tolerance for bin masses.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default evaluation budget.
pub const DEFAULT_BUDGET: usize = 20_000_000;

const MAX_DEPTH: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Simpson<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    evals: usize,
    budget: usize,
    error: f64,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.evals += 1;
        if self.evals > self.budget {
            return Err(Error::Quadrature {
                tolerance: f64::NAN,
                evaluations: self.evals,
            });
        }
        Ok((self.f)(x))
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            self.error += delta.abs() / 15.0;
            return Ok(left + right + delta / 15.0);
        }
        if depth >= MAX_DEPTH {
            return Err(Error::Quadrature {
                tolerance: tol,
                evaluations: self.evals,
            });
        }
        Ok(self.refine(a, m, fa, flm, fm, left, tol / 2.0, depth + 1)?
            + self.refine(m, b, fm, frm, fb, right, tol / 2.0, depth + 1)?)
    }
}

/// Adaptive Simpson over `panels` equal sub-intervals of `[a, b]`.
pub fn adaptive_simpson(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
    tol: f64,
    budget: usize,
) -> Result<QuadratureResult> {
    if !(a.is_finite() && b.is_finite()) || !(tol > 0.0) || panels == 0 {
        return Err(Error::Parameter("bad quadrature arguments".into()));
    }
    let mut s = Simpson {
        f: &f,
        evals: 0,
        budget,
        error: 0.0,
    };
    let h = (b - a) / panels as f64;
    let per_panel = tol / panels as f64;
    let mut value = 0.0;
    let wrap = |e: Error| match e {
        Error::Quadrature { evaluations, .. } => Error::Quadrature {
            tolerance: tol,
            evaluations,
        },
        other => other,
    };
    let mut fa = s.eval(a).map_err(wrap)?;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let hi = if p + 1 == panels { b } else { lo + h };
        let fm = s.eval(0.5 * (lo + hi)).map_err(wrap)?;
        let fb = s.eval(hi).map_err(wrap)?;
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        value += s
            .refine(lo, hi, fa, fm, fb, whole, per_panel, 0)
            .map_err(wrap)?;
        fa = fb;
    }
    Ok(QuadratureResult {
        value,
        error: s.error,
        evaluations: s.evals,
    })
}

fn panels_for(dim: usize, a: f64, b: f64) -> usize {
    ((8.0 * dim as f64 * (b - a).abs() / TAU).ceil() as usize).max(4)
}

/// Mass of the outcome density of |ψ(θ_v)⟩ on `(a, b)` with θ_v = δ.
///
/// Interval end points are measured in the frame where the option qudit's
/// grid level is 0, so bin `l` of the qudit is `(x_l, x_{l+1})` with
/// `x_l = 2πl/D` for any integer `l`.
pub fn integrate_f_with(
    delta: f64,
    dim: usize,
    interval: (f64, f64),
    tol: f64,
    budget: usize,
) -> Result<QuadratureResult> {
    let (a, b) = interval;
    if dim == 0 {
        return Err(Error::Parameter("dimension must be positive".into()));
    }
    if !(a <= b) || b - a > TAU + 1e-12 || a < -TAU || b > 2.0 * TAU {
        return Err(Error::Parameter(format!(
            "interval ({a}, {b}) must be ordered, at most 2π long and inside [-2π, 4π]"
        )));
    }
    adaptive_simpson(
        |theta| povm_density(theta - delta, dim),
        a,
        b,
        panels_for(dim, a, b),
        tol,
        budget,
    )
}

pub fn integrate_f(delta: f64, dim: usize, interval: (f64, f64)) -> Result<QuadratureResult> {
    integrate_f_with(delta, dim, interval, DEFAULT_TOL, DEFAULT_BUDGET)
}

fn x(l: i64, dim: usize) -> f64 {
    TAU * l as f64 / dim as f64
}

/// Mass of bin `(x_{l_v+offset}, x_{l_v+offset+1})` for offset δ.
pub fn bin_mass(delta: f64, dim: usize, offset: i64) -> Result<QuadratureResult> {
    integrate_f(delta, dim, (x(offset, dim), x(offset + 1, dim)))
}

/// Mass of the three bins around the option qudit's level.
pub fn three_bin_mass(delta: f64, dim: usize) -> Result<QuadratureResult> {
    if dim < 3 {
        return Err(Error::Parameter(
            "three distinct bins need a dimension of at least 3".into(),
        ));
    }
    integrate_f(delta, dim, (x(-1, dim), x(2, dim)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Boundary {
    /// l_v = 0
    Low,
    /// l_v = D − 1
    High,
}

/// Three-bin mass for a level on the edge of `[0, 2π)`, computed from the
/// two pieces that straddle the wrap point.
pub fn wraparound_mass(delta: f64, dim: usize, boundary: Boundary) -> Result<QuadratureResult> {
    if dim < 3 {
        return Err(Error::Parameter(
            "three distinct bins need a dimension of at least 3".into(),
        ));
    }
    let d = dim as i64;
    let (theta_v, pieces) = match boundary {
        Boundary::High => (x(d - 1, dim) + delta, [(d - 2, d), (0, 1)]),
        Boundary::Low => (delta, [(d - 1, d), (0, 2)]),
    };
    let mut total = QuadratureResult {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for (lo, hi) in pieces {
        let (a, b) = (x(lo, dim), x(hi, dim));
        let r = adaptive_simpson(
            |theta| povm_density(theta - theta_v, dim),
            a,
            b,
            panels_for(dim, a, b),
            DEFAULT_TOL / 2.0,
            DEFAULT_BUDGET,
        )?;
        total.value += r.value;
        total.error += r.error;
        total.evaluations += r.evaluations;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1, 1e-12, 1000).unwrap();
        assert!((r.value - 4.0).abs() < 1e-14);
        assert!(r.error <= 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let err = adaptive_simpson(|x| (1.0 / x).sin(), 1e-4, 1.0, 1, 1e-14, 50).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn full_circle_is_one() {
        for d in [1, 2, 4, 8, 16, 64] {
            let r = integrate_f(0.3, d, (0.0, TAU)).unwrap();
            assert!((r.value - 1.0).abs() < 1e-8, "D={d}: {}", r.value);
            assert!(r.error <= DEFAULT_TOL);
        }
    }

    #[test]
    fn single_bin_at_zero_offset() {
        let r = bin_mass(0.0, 8, 0).unwrap();
        assert!(r.value >= 4.0 / (PI * PI));
    }

    #[test]
    fn small_dimension_three_bins_rejected() {
        assert!(three_bin_mass(0.0, 2).is_err());
    }
}

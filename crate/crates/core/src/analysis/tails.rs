use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Tail {
    /// Pr[X ≤ (1 − γ)μ] ≤ exp(−γ²μ/3)
    Lower,
    /// Pr[X ≥ (1 + γ)μ] ≤ exp(−γμ/3), stated for γ > 1
    Upper,
}

pub fn chernoff_bound(mu: f64, gamma: f64, tail: Tail) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Parameter(format!("mean {mu} must be positive")));
    }
    match tail {
        Tail::Lower if gamma > 0.0 => Ok((-gamma * gamma * mu / 3.0).exp()),
        Tail::Upper if gamma > 1.0 => Ok((-gamma * mu / 3.0).exp()),
        _ => Err(Error::Parameter(format!(
            "gamma {gamma} outside the {tail:?} tail's range"
        ))),
    }
}

/// Lower-tail bound on a bin with probability `p` collecting fewer than
/// `threshold · samples` hits.
pub fn bin_undercount_bound(p: f64, threshold: f64, samples: u64) -> Result<f64> {
    if !(0.0 < threshold && threshold < p && p <= 1.0) {
        return Err(Error::Parameter(format!(
            "need 0 < threshold < p <= 1, got {threshold}, {p}"
        )));
    }
    chernoff_bound(p * samples as f64, 1.0 - threshold / p, Tail::Lower)
}

/// Smallest sample count for which [`bin_undercount_bound`] drops below `target`.
pub fn samples_for_undercount(p: f64, threshold: f64, target: f64) -> Result<u64> {
    bin_undercount_bound(p, threshold, 1)?;
    if !(0.0 < target && target < 1.0) {
        return Err(Error::Parameter("target must lie in (0, 1)".into()));
    }
    let gamma = 1.0 - threshold / p;
    let mut n = (3.0 * (1.0 / target).ln() / (gamma * gamma * p))
        .floor()
        .max(1.0) as u64;
    while bin_undercount_bound(p, threshold, n)? >= target {
        n += 1;
    }
    Ok(n)
}

/// Upper-tail bound on a bin with probability at most `p` reaching
/// `threshold · samples` hits.
pub fn bin_overcount_bound(p: f64, threshold: f64, samples: u64) -> Result<f64> {
    if !(p > 0.0 && threshold > 2.0 * p) {
        return Err(Error::Parameter(format!(
            "the upper-tail form needs threshold > 2p, got {threshold}, {p}"
        )));
    }
    chernoff_bound(p * samples as f64, threshold / p - 1.0, Tail::Upper)
}

/// (1 − 1/ρ)^ρ.
pub fn rounds_threshold(rho: u64) -> Result<f64> {
    if rho < 2 {
        return Err(Error::Parameter(format!("rho = {rho} must be at least 2")));
    }
    let r = rho as f64;
    Ok((r * (-1.0 / r).ln_1p()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_gamma_tends_to_one() {
        let b = chernoff_bound(10.0, 1e-9, Tail::Lower).unwrap();
        assert!((b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn domains() {
        assert!(chernoff_bound(0.0, 0.5, Tail::Lower).is_err());
        assert!(chernoff_bound(1.0, 0.5, Tail::Upper).is_err());
        assert!(chernoff_bound(1.0, 0.0, Tail::Lower).is_err());
        assert!(rounds_threshold(1).is_err());
    }

    #[test]
    fn rounds_values() {
        assert_eq!(rounds_threshold(2).unwrap(), 0.25);
        assert!((rounds_threshold(10).unwrap() - 0.348_678_440_1).abs() < 1e-10);
        let big = rounds_threshold(1_000_000).unwrap();
        assert!(big < (-1f64).exp() && big > 0.3678);
    }

    #[test]
    fn overcount_bound_below_one() {
        for n in 10..200 {
            assert!(bin_overcount_bound(0.1, 0.4, n).unwrap() < 1.0);
        }
    }

    #[test]
    fn undercount_sample_count_is_minimal() {
        let n = samples_for_undercount(0.45, 0.4, 0.02).unwrap();
        assert!(bin_undercount_bound(0.45, 0.4, n).unwrap() < 0.02);
        assert!(bin_undercount_bound(0.45, 0.4, n - 1).unwrap() >= 0.02);
    }
}

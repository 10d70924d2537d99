//! Small statistics helpers shared by the harness and the tests.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Wilson score interval for `successes` out of `n`.
pub fn wilson(successes: u64, n: u64, z: f64) -> Interval {
    assert!(n > 0, "wilson interval of an empty sample");
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    Interval {
        lo: (centre - half).max(0.0),
        hi: (centre + half).min(1.0),
    }
}

/// Standardised deviation of `k` successes in `n` Bernoulli(`p`) trials.
pub fn binomial_z(k: u64, n: u64, p: f64) -> f64 {
    let n_f = n as f64;
    let sd = (n_f * p * (1.0 - p)).sqrt();
    let diff = k as f64 - n_f * p;
    if sd == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / sd
    }
}

/// Pearson statistic of `observed` counts against cell probabilities `probs`.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> f64 {
    assert_eq!(observed.len(), probs.len());
    let n: u64 = observed.iter().sum();
    observed
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_half() {
        let iv = wilson(50, 100, Z95);
        assert!(iv.contains(0.5));
        assert!((iv.lo - 0.403_831).abs() < 1e-5);
    }

    #[test]
    fn wilson_all_wins() {
        let iv = wilson(100, 100, Z95);
        assert!(iv.lo > 0.96);
        assert_eq!(iv.hi, 1.0);
    }

    #[test]
    fn chi_square_exact_fit_is_zero() {
        assert_eq!(chi_square(&[25, 75], &[0.25, 0.75]), 0.0);
    }
}

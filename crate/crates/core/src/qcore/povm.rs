//! Sampling the continuous phase measurement on option qudits.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use super::state::PureState;
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Number of CDF cells in a sampler table.
pub const TABLE_CELLS: usize = 1 << 16;

const SINGULAR_EPS: f64 = 1e-8;

/// sin²(Dφ/2) / sin²(φ/2), equal to D² where the denominator vanishes.
pub fn fejer_ratio(phi: f64, dim: usize) -> f64 {
    let s = (phi / 2.0).sin();
    if s.abs() < SINGULAR_EPS {
        return (dim * dim) as f64;
    }
    let n = (dim as f64 * phi / 2.0).sin();
    (n * n) / (s * s)
}

/// Outcome density at offset `phi = θ − θ_v`.
pub fn povm_density(phi: f64, dim: usize) -> f64 {
    fejer_ratio(phi, dim) / (TAU * dim as f64)
}

/// Outcome density of the phase measurement on an arbitrary one-qudit state.
pub fn povm_density_state(state: &PureState, theta: f64) -> f64 {
    let s: Complex64 = state
        .amps()
        .iter()
        .enumerate()
        .map(|(j, a)| Complex64::from_polar(1.0, -(j as f64) * theta) * a)
        .sum();
    s.norm_sqr() / TAU
}

/// Draws from the phase measurement on an arbitrary one-qudit state by
/// rejection against the uniform proposal. Slow; kept as a reference path.
pub fn povm_sample_state(state: &PureState, rng: &mut SimRng) -> Result<f64> {
    if state.num_qudits() != 1 {
        return Err(Error::Parameter(
            "phase measurement acts on one qudit".into(),
        ));
    }
    let d = state.dims()[0] as f64;
    loop {
        let theta = rng.uniform() * TAU;
        if rng.uniform() * d / TAU < povm_density_state(state, theta) {
            return Ok(theta);
        }
    }
}

/// Inverse-CDF sampler for one dimension `D`.
#[derive(Debug, Clone)]
pub struct PovmSampler {
    dim: usize,
    cdf: Vec<f64>,
}

impl PovmSampler {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        let h = TAU / TABLE_CELLS as f64;
        let mut cdf = Vec::with_capacity(TABLE_CELLS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        let mut left = povm_density(0.0, dim);
        for i in 0..TABLE_CELLS {
            let a = i as f64 * h;
            let mid = povm_density(a + h / 2.0, dim);
            let right = povm_density(a + h, dim);
            acc += h / 6.0 * (left + 4.0 * mid + right);
            cdf.push(acc);
            left = right;
        }
        let total = acc;
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(Self { dim, cdf })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Offset φ ∈ [0, 2π) with CDF value `u`.
    pub fn offset_for(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, TABLE_CELLS) - 1;
        let (lo, hi) = (self.cdf[i], self.cdf[i + 1]);
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.0 };
        (i as f64 + frac.clamp(0.0, 1.0)) * TAU / TABLE_CELLS as f64
    }

    /// One outcome angle in [0, 2π) for an option qudit at phase `theta_v`.
    pub fn sample(&self, theta_v: f64, rng: &mut SimRng) -> f64 {
        let theta = (theta_v + self.offset_for(rng.uniform())).rem_euclid(TAU);
        if theta >= TAU {
            0.0
        } else {
            theta
        }
    }
}

fn cached_sampler(dim: usize) -> Result<Arc<PovmSampler>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<PovmSampler>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(s) = cache.lock().expect("sampler cache").get(&dim) {
        return Ok(Arc::clone(s));
    }
    let sampler = Arc::new(PovmSampler::new(dim)?);
    cache
        .lock()
        .expect("sampler cache")
        .entry(dim)
        .or_insert_with(|| Arc::clone(&sampler));
    Ok(sampler)
}

/// Outcome of measuring |ψ(θ_v)⟩ of dimension `dim` with the phase POVM.
pub fn povm_theta_sample(dim: usize, theta_v: f64, rng: &mut SimRng) -> Result<f64> {
    if !theta_v.is_finite() {
        return Err(Error::Parameter("phase must be finite".into()));
    }
    Ok(cached_sampler(dim)?.sample(theta_v, rng))
}

/// `count` outcomes for the same option qudit.
pub fn povm_theta_samples(
    dim: usize,
    theta_v: f64,
    count: usize,
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    let sampler = cached_sampler(dim)?;
    Ok((0..count).map(|_| sampler.sample(theta_v, rng)).collect())
}

/// Grid point x_l = 2πl/D.
pub fn grid_point(l: usize, dim: usize) -> f64 {
    2.0 * PI * l as f64 / dim as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::make_ghz_phase_state;

    #[test]
    fn dimension_one_is_uniform() {
        for phi in [0.0, 0.5, 3.0, 6.0] {
            assert!((povm_density(phi, 1) - 1.0 / TAU).abs() < 1e-15);
        }
        let s = PovmSampler::new(1).unwrap();
        assert!((s.offset_for(0.25) - TAU / 4.0).abs() < 1e-9);
    }

    #[test]
    fn kernel_limit_at_zero() {
        assert_eq!(fejer_ratio(0.0, 8), 64.0);
        assert!((fejer_ratio(1e-6, 8) - 64.0).abs() < 1e-6);
    }

    #[test]
    fn table_is_monotone_and_normalised() {
        let s = PovmSampler::new(8).unwrap();
        assert!(s.cdf.windows(2).all(|w| w[1] >= w[0]));
        assert!((s.cdf[TABLE_CELLS] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn generic_density_matches_kernel() {
        let d = 6;
        let theta_v = 1.234;
        let psi = make_ghz_phase_state(1, d, |j| j as f64 * theta_v).unwrap();
        for k in 0..50 {
            let theta = k as f64 * 0.1257;
            let a = povm_density_state(&psi, theta);
            let b = povm_density(theta - theta_v, d);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn samples_lie_in_range() {
        let mut rng = SimRng::new(9);
        for _ in 0..1000 {
            let x = povm_theta_sample(4, 6.2, &mut rng).unwrap();
            assert!((0.0..TAU).contains(&x));
        }
    }

    #[test]
    fn zero_dimension_rejected() {
        let mut rng = SimRng::new(0);
        assert!(povm_theta_sample(0, 0.0, &mut rng).is_err());
    }
}

use serde::{Deserialize, Serialize};

use super::operator::Operator;
use super::state::PureState;
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    Computational,
    Fourier,
    PovmTheta,
    RPair,
}

/// Result of a discrete projective measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub outcome: usize,
    pub basis: Basis,
    pub collapsed: PureState,
}

/// Picks an index from `weights` using a single uniform draw `u`.
///
/// Zero-weight entries are never chosen; `weights` need not sum to one.
pub fn pick(weights: &[f64], u: f64) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Internal("all outcome weights are zero".into()));
    }
    let target = u * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if target < acc {
            return Ok(i);
        }
    }
    last.ok_or_else(|| Error::Internal("no outcome selected".into()))
}

/// Measures the basis-index classes given by `classify` (values in `0..classes`)
/// and collapses onto the observed class.
pub fn measure_classes(
    state: &PureState,
    classes: usize,
    classify: impl Fn(usize) -> usize,
    basis: Basis,
    rng: &mut SimRng,
) -> Result<MeasurementRecord> {
    let mut weights = vec![0.0; classes];
    for (i, a) in state.amps().iter().enumerate() {
        let k = classify(i);
        if k >= classes {
            return Err(Error::Index(format!("class {k} out of {classes}")));
        }
        weights[k] += a.norm_sqr();
    }
    let outcome = pick(&weights, rng.uniform())?;
    let collapsed = state.project(|i| classify(i) == outcome)?;
    Ok(MeasurementRecord {
        outcome,
        basis,
        collapsed,
    })
}

pub fn measure_computational(
    state: &PureState,
    target: usize,
    rng: &mut SimRng,
) -> Result<MeasurementRecord> {
    state.check_target(target)?;
    let stride = state.strides()[target];
    let d = state.dims()[target];
    measure_classes(state, d, |i| (i / stride) % d, Basis::Computational, rng)
}

/// Measures `target` in the Fourier basis {F|k⟩}. The collapsed state holds
/// F|k⟩ on the target.
pub fn measure_fourier(
    state: &PureState,
    target: usize,
    rng: &mut SimRng,
) -> Result<MeasurementRecord> {
    state.check_target(target)?;
    let f = Operator::fourier(state.dims()[target]);
    let rotated = state.apply_unitary(&f.dagger(), &[target])?;
    let mut rec = measure_computational(&rotated, target, rng)?;
    rec.collapsed = rec.collapsed.apply_unitary(&f, &[target])?;
    rec.basis = Basis::Fourier;
    Ok(rec)
}

/// Measures every qudit computationally with one draw; returns the digits.
pub fn measure_all(state: &PureState, rng: &mut SimRng) -> Result<Vec<usize>> {
    let idx = pick(&state.probabilities(), rng.uniform())?;
    Ok(state.digits_of(idx))
}

/// Measures every qudit in the Fourier basis; returns the digits.
pub fn measure_all_fourier(state: &PureState, rng: &mut SimRng) -> Result<Vec<usize>> {
    let mut s = state.clone();
    for q in 0..s.num_qudits() {
        s = s.apply_unitary(&Operator::fourier(s.dims()[q]).dagger(), &[q])?;
    }
    measure_all(&s, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::make_ghz_phase_state;
    use num_complex::Complex64;

    #[test]
    fn basis_state_outcome_is_certain() {
        let s = PureState::basis(&[2], &[1]).unwrap();
        let mut rng = SimRng::new(1);
        for _ in 0..20 {
            assert_eq!(measure_computational(&s, 0, &mut rng).unwrap().outcome, 1);
        }
    }

    #[test]
    fn bell_measurement_collapses_partner() {
        let s = make_ghz_phase_state(2, 2, |_| 0.0).unwrap();
        let mut rng = SimRng::new(2);
        let mut seen = [0; 2];
        for _ in 0..2000 {
            let rec = measure_computational(&s, 0, &mut rng).unwrap();
            seen[rec.outcome] += 1;
            let partner = measure_computational(&rec.collapsed, 1, &mut rng).unwrap();
            assert_eq!(partner.outcome, rec.outcome);
        }
        assert!(seen[0] > 900 && seen[1] > 900);
    }

    #[test]
    fn uniform_superposition_is_fourier_zero() {
        let s = make_ghz_phase_state(1, 6, |_| 0.0).unwrap();
        let mut rng = SimRng::new(3);
        for _ in 0..50 {
            let rec = measure_fourier(&s, 0, &mut rng).unwrap();
            assert_eq!(rec.outcome, 0);
            assert!(rec.collapsed.approx_eq_up_to_phase(&s, 1e-12));
        }
    }

    #[test]
    fn pick_skips_zero_weights() {
        assert_eq!(pick(&[0.0, 1.0, 0.0], 0.0).unwrap(), 1);
        assert_eq!(pick(&[0.0, 1.0, 0.0], 0.999_999).unwrap(), 1);
        assert_eq!(pick(&[0.5, 0.0, 0.5], 0.5).unwrap(), 2);
        assert!(pick(&[0.0, 0.0], 0.3).is_err());
    }

    #[test]
    fn collapsed_state_is_normalised() {
        let amp = Complex64::new(0.5, 0.0);
        let s = PureState::new(vec![2, 2], vec![amp; 4]).unwrap();
        let mut rng = SimRng::new(4);
        let rec = measure_computational(&s, 1, &mut rng).unwrap();
        assert!((rec.collapsed.norm() - 1.0).abs() < 1e-12);
    }
}

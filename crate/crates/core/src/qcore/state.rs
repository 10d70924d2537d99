use num_complex::Complex64;

use super::operator::{Operator, UNITARY_TOL};
use crate::error::{Error, Result};

/// Maximum number of amplitudes a state may hold.
pub const CAPACITY: usize = 1 << 22;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense pure state over a register of qudits.
///
/// Qudit 0 is the most significant digit of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amps: Vec<Complex64>,
}

pub(crate) fn checked_size(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::Parameter("a state needs at least one qudit".into()));
    }
    let mut size: usize = 1;
    for &d in dims {
        if d < 2 {
            return Err(Error::Parameter(format!("qudit dimension {d} < 2")));
        }
        size = size
            .checked_mul(d)
            .filter(|&s| s <= CAPACITY)
            .ok_or(Error::Capacity {
                requested: dims.iter().fold(1usize, |a, &d| a.saturating_mul(d)),
                capacity: CAPACITY,
            })?;
    }
    Ok(size)
}

fn norm_of(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

impl PureState {
    /// Wraps `amps`; fails unless the vector has unit norm.
    pub fn new(dims: Vec<usize>, amps: Vec<Complex64>) -> Result<Self> {
        let size = checked_size(&dims)?;
        if amps.len() != size {
            return Err(Error::Index(format!(
                "{} amplitudes for a register of size {size}",
                amps.len()
            )));
        }
        let n = norm_of(&amps);
        if (n - 1.0).abs() > UNITARY_TOL {
            return Err(Error::Domain(format!("state norm {n} is not 1")));
        }
        Ok(Self { dims, amps })
    }

    /// Wraps `amps` after rescaling to unit norm.
    pub fn normalized(dims: Vec<usize>, mut amps: Vec<Complex64>) -> Result<Self> {
        let n = norm_of(&amps);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Internal("cannot normalise a zero vector".into()));
        }
        amps.iter_mut().for_each(|a| *a /= n);
        Self::new(dims, amps)
    }

    /// Computational basis state |digits⟩.
    pub fn basis(dims: &[usize], digits: &[usize]) -> Result<Self> {
        let size = checked_size(dims)?;
        if digits.len() != dims.len() || digits.iter().zip(dims).any(|(&x, &d)| x >= d) {
            return Err(Error::Index(format!("digits {digits:?} for dims {dims:?}")));
        }
        let mut amps = vec![ZERO; size];
        amps[index_of(dims, digits)] = Complex64::new(1.0, 0.0);
        Ok(Self {
            dims: dims.to_vec(),
            amps,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn num_qudits(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amps)
    }

    pub fn amp(&self, digits: &[usize]) -> Complex64 {
        self.amps[index_of(&self.dims, digits)]
    }

    /// Place value of each qudit in the basis index.
    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.dims)
    }

    pub fn digits_of(&self, index: usize) -> Vec<usize> {
        digits_of(&self.dims, index)
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        index_of(&self.dims, digits)
    }

    /// Tensor product, `self` on the more significant qudits.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        checked_size(&dims)?;
        let mut amps = Vec::with_capacity(self.len() * other.len());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Ok(Self { dims, amps })
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// True when the states agree up to a global phase.
    pub fn approx_eq_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        self.dims == other.dims && (1.0 - self.inner(other).norm()).abs() <= tol
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Outcome distribution of a computational measurement on `target`.
    pub fn marginal(&self, target: usize) -> Result<Vec<f64>> {
        self.check_target(target)?;
        let stride = self.strides()[target];
        let d = self.dims[target];
        let mut p = vec![0.0; d];
        for (i, a) in self.amps.iter().enumerate() {
            p[(i / stride) % d] += a.norm_sqr();
        }
        Ok(p)
    }

    pub(crate) fn check_target(&self, target: usize) -> Result<()> {
        if target >= self.dims.len() {
            return Err(Error::Index(format!(
                "qudit {target} out of range for {} qudits",
                self.dims.len()
            )));
        }
        Ok(())
    }

    fn check_norm(self) -> Result<Self> {
        let n = self.norm();
        if (n - 1.0).abs() > UNITARY_TOL {
            return Err(Error::Internal(format!("norm drifted to {n}")));
        }
        Ok(self)
    }

    /// Applies `u` to the subsystem `targets` (first target most significant).
    pub fn apply_unitary(&self, u: &Operator, targets: &[usize]) -> Result<Self> {
        for (i, &t) in targets.iter().enumerate() {
            self.check_target(t)?;
            if targets[..i].contains(&t) {
                return Err(Error::Index(format!("target {t} repeated")));
            }
        }
        if targets.is_empty() {
            return Err(Error::Index("no targets".into()));
        }
        let sub: usize = targets.iter().map(|&t| self.dims[t]).product();
        if u.dim() != sub {
            return Err(Error::Index(format!(
                "operator dimension {} does not match subsystem dimension {sub}",
                u.dim()
            )));
        }
        let deviation = u.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::Unitarity { deviation });
        }
        let strides = self.strides();
        let offsets: Vec<usize> = (0..sub)
            .map(|s| {
                let mut rem = s;
                let mut off = 0;
                for &t in targets.iter().rev() {
                    off += (rem % self.dims[t]) * strides[t];
                    rem /= self.dims[t];
                }
                off
            })
            .collect();
        let mut out = vec![ZERO; self.len()];
        let mut buf = vec![ZERO; sub];
        let data = u.data();
        for base in 0..self.len() {
            if targets
                .iter()
                .any(|&t| !(base / strides[t]).is_multiple_of(self.dims[t]))
            {
                continue;
            }
            for (s, &off) in offsets.iter().enumerate() {
                buf[s] = self.amps[base + off];
            }
            for (r, &off) in offsets.iter().enumerate() {
                let row = &data[r * sub..(r + 1) * sub];
                out[base + off] = row.iter().zip(&buf).map(|(x, y)| x * y).sum();
            }
        }
        Self {
            dims: self.dims.clone(),
            amps: out,
        }
        .check_norm()
    }

    /// Multiplies each amplitude by `e^{i phase(digit)}` where `digit` is the
    /// value of qudit `target`. Equivalent to a diagonal unitary.
    pub fn apply_phase(&self, target: usize, phase: impl Fn(usize) -> f64) -> Result<Self> {
        self.check_target(target)?;
        let d = self.dims[target];
        let stride = self.strides()[target];
        let factors: Vec<Complex64> = (0..d)
            .map(|j| Complex64::from_polar(1.0, phase(j)))
            .collect();
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| a * factors[(i / stride) % d])
            .collect();
        Ok(Self {
            dims: self.dims.clone(),
            amps,
        })
    }

    /// Projects onto basis indices accepted by `keep` and renormalises.
    pub(crate) fn project(&self, keep: impl Fn(usize) -> bool) -> Result<Self> {
        let amps: Vec<Complex64> = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, &a)| if keep(i) { a } else { ZERO })
            .collect();
        let n = norm_of(&amps);
        if n < 1e-300 {
            return Err(Error::Internal("measurement branch has zero norm".into()));
        }
        Self::normalized(self.dims.clone(), amps)
    }
}

pub(crate) fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for q in (0..dims.len().saturating_sub(1)).rev() {
        strides[q] = strides[q + 1] * dims[q + 1];
    }
    strides
}

pub(crate) fn digits_of(dims: &[usize], mut index: usize) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for q in (0..dims.len()).rev() {
        digits[q] = index % dims[q];
        index /= dims[q];
    }
    digits
}

pub(crate) fn index_of(dims: &[usize], digits: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// (1/√D) Σ_j e^{i·phase(j)} |j⟩^{⊗copies}.
pub fn make_ghz_phase_state(
    copies: usize,
    dim: usize,
    phase: impl Fn(usize) -> f64,
) -> Result<PureState> {
    if copies == 0 {
        return Err(Error::Parameter("copies must be at least 1".into()));
    }
    let dims = vec![dim; copies];
    let size = checked_size(&dims)?;
    let mut amps = vec![ZERO; size];
    let norm = 1.0 / (dim as f64).sqrt();
    for j in 0..dim {
        amps[index_of(&dims, &vec![j; copies])] = Complex64::from_polar(norm, phase(j));
    }
    PureState::new(dims, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let s = make_ghz_phase_state(3, 3, |j| j as f64 * 0.3).unwrap();
        let out = s.apply_unitary(&Operator::identity(3), &[1]).unwrap();
        assert!(out
            .amps()
            .iter()
            .zip(s.amps())
            .all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn bit_flip_swaps_amplitudes() {
        let (a, b) = (0.6, 0.8);
        let s = PureState::new(vec![2], vec![c(a), c(b)]).unwrap();
        let out = s.apply_unitary(&Operator::bit_flip(), &[0]).unwrap();
        assert_eq!(out.amps(), &[c(b), c(a)]);
    }

    #[test]
    fn bell_state_from_ghz() {
        let s = make_ghz_phase_state(2, 2, |_| 0.0).unwrap();
        let h = FRAC_1_SQRT_2;
        let expected = [h, 0.0, 0.0, h];
        for (a, e) in s.amps().iter().zip(expected) {
            assert!((a - c(e)).norm() < 1e-15);
        }
    }

    #[test]
    fn option_qudit_phases() {
        let theta = 0.7;
        let s = make_ghz_phase_state(1, 5, |j| j as f64 * theta).unwrap();
        for j in 0..5 {
            let expected = Complex64::from_polar(1.0 / 5f64.sqrt(), j as f64 * theta);
            assert!((s.amps()[j] - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn capacity_is_enforced() {
        let err = make_ghz_phase_state(23, 2, |_| 0.0).unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));
        assert!(make_ghz_phase_state(22, 2, |_| 0.0).is_ok());
    }

    #[test]
    fn bad_targets_are_rejected() {
        let s = PureState::basis(&[2, 2], &[0, 1]).unwrap();
        let cnot_like = Operator::identity(4);
        assert!(matches!(
            s.apply_unitary(&cnot_like, &[0, 0]),
            Err(Error::Index(_))
        ));
        assert!(matches!(
            s.apply_unitary(&Operator::identity(2), &[2]),
            Err(Error::Index(_))
        ));
        let skew = Operator::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(
            s.apply_unitary(&skew, &[0]),
            Err(Error::Unitarity { .. })
        ));
    }

    #[test]
    fn two_qudit_target_order() {
        // Swap-like permutation on targets (2, 0) of |0 1 1⟩ over dims [2,2,2].
        let s = PureState::basis(&[2, 2, 2], &[0, 1, 1]).unwrap();
        let flip_first = Operator::bit_flip().kron(&Operator::identity(2));
        let out = s.apply_unitary(&flip_first, &[2, 0]).unwrap();
        assert_eq!(out.amp(&[0, 1, 0]), c(1.0));
    }

    #[test]
    fn unnormalised_input_rejected() {
        assert!(PureState::new(vec![2], vec![c(1.0), c(1.0)]).is_err());
        assert!(PureState::normalized(vec![2], vec![c(1.0), c(1.0)]).is_ok());
    }
}

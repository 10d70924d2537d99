use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance used for unitarity and norm checks.
pub const UNITARY_TOL: f64 = 1e-9;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<Complex64>,
}

impl Operator {
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::Index(format!(
                "operator of dimension {dim} needs {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::Index("ragged matrix".into()));
            }
            data.extend(row.iter().map(|&x| Complex64::new(x, 0.0)));
        }
        Self::new(dim, data)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![0.0; dim])
    }

    /// `e^{i φ_j}` on the diagonal.
    pub fn diagonal(phases: &[f64]) -> Self {
        let dim = phases.len();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (j, &p) in phases.iter().enumerate() {
            data[j * dim + j] = Complex64::from_polar(1.0, p);
        }
        Self { dim, data }
    }

    /// Σ_j |j+k mod d⟩⟨j|.
    pub fn shift(dim: usize, k: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for j in 0..dim {
            data[((j + k) % dim) * dim + j] = Complex64::new(1.0, 0.0);
        }
        Self { dim, data }
    }

    /// F|j⟩ = d^{-1/2} Σ_k e^{2πijk/d} |k⟩.
    pub fn fourier(dim: usize) -> Self {
        let norm = 1.0 / (dim as f64).sqrt();
        let mut data = Vec::with_capacity(dim * dim);
        for k in 0..dim {
            for j in 0..dim {
                let angle = 2.0 * PI * ((j * k) % dim) as f64 / dim as f64;
                data.push(Complex64::from_polar(norm, angle));
            }
        }
        Self { dim, data }
    }

    /// The matrix [[0,1],[1,0]].
    pub fn bit_flip() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("2x2")
    }

    /// The matrix [[0,-1],[1,0]], which flips the encoded bit in both BB84 bases.
    pub fn y_flip() -> Self {
        Self::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).expect("2x2")
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real_rows(&[&[h, h], &[h, -h]]).expect("2x2")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                data[c * d + r] = self.data[r * d + c].conj();
            }
        }
        Self { dim: d, data }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Index("operator dimensions differ".into()));
        }
        let d = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..d {
                    data[r * d + c] += a * other.data[k * d + c];
                }
            }
        }
        Ok(Self { dim: d, data })
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Self::identity(self.dim);
        for _ in 0..k {
            acc = acc.matmul(self).expect("same dimension");
        }
        acc
    }

    /// Kronecker product, `self` on the more significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.dim, other.dim);
        let d = a * b;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for r1 in 0..a {
            for c1 in 0..a {
                let x = self.data[r1 * a + c1];
                for r2 in 0..b {
                    for c2 in 0..b {
                        data[(r1 * b + r2) * d + c1 * b + c2] = x * other.data[r2 * b + c2];
                    }
                }
            }
        }
        Self { dim: d, data }
    }

    /// Largest entry of |U†U − I|.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in 0..d {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    s += self.data[k * d + r].conj() * self.data[k * d + c];
                }
                if r == c {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_deviation() <= UNITARY_TOL
    }

    /// Entry-wise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_to_the_dimension_is_identity() {
        for d in 2..=8 {
            let s = Operator::shift(d, 1);
            assert!(s.pow(d).max_abs_diff(&Operator::identity(d)) < 1e-12);
            assert!(s.pow(d - 1).max_abs_diff(&Operator::identity(d)) > 0.5);
        }
    }

    #[test]
    fn standard_gates_are_unitary() {
        for d in 2..=9 {
            assert!(Operator::fourier(d).is_unitary());
            assert!(Operator::shift(d, 3).is_unitary());
        }
        assert!(Operator::bit_flip().is_unitary());
        assert!(Operator::y_flip().is_unitary());
        assert!(Operator::hadamard().is_unitary());
    }

    #[test]
    fn non_unitary_is_detected() {
        let m = Operator::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(!m.is_unitary());
    }

    #[test]
    fn fourier_dagger_inverts() {
        let f = Operator::fourier(5);
        let p = f.matmul(&f.dagger()).unwrap();
        assert!(p.max_abs_diff(&Operator::identity(5)) < 1e-12);
    }

    #[test]
    fn kron_orders_factors() {
        let k = Operator::bit_flip().kron(&Operator::identity(2));
        // |00⟩ ↦ |10⟩
        assert_eq!(k.get(2, 0), Complex64::new(1.0, 0.0));
    }
}

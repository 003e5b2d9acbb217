use serde::{Deserialize, Serialize};

use super::dot;
use crate::error::{Error, Result};

/// Square real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        SquareMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Builds from external row-major data, rejecting NaN and infinities.
    pub fn from_vec(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if let Some(position) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { position });
        }
        Ok(SquareMatrix { dim, data })
    }

    pub(crate) fn from_raw(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        SquareMatrix { dim, data }
    }

    /// `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        let dim = v.len();
        let data = v
            .iter()
            .flat_map(|&a| v.iter().map(move |&b| a * b))
            .collect();
        SquareMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// 0-based access.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    /// Frobenius inner product `⟨A, B⟩`.
    pub fn inner(&self, other: &SquareMatrix) -> f64 {
        dot(&self.data, &other.data)
    }

    /// `vᵀ M v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.data
            .chunks_exact(self.dim)
            .zip(v)
            .map(|(row, &vi)| vi * dot(row, v))
            .sum()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.dim)
            .map(|row| dot(row, v))
            .collect()
    }

    pub fn transpose(&self) -> SquareMatrix {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    /// `M + Mᵀ`, exactly symmetric.
    pub fn symmetrized(&self) -> SquareMatrix {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = self.data[i * n + j] + self.data[j * n + i];
            }
        }
        out
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        worst
    }

    pub fn scaled(&self, c: f64) -> SquareMatrix {
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// `self = a * self + b * other`.
    pub fn combine(&mut self, a: f64, b: f64, other: &SquareMatrix) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x = a * *x + b * y;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Tolerance on the norm of a [`UnitVector`].
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// A vector with Euclidean norm within `1 ± 1e-12`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let norm = dot(&v, &v).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnit { norm });
        }
        Ok(UnitVector(v))
    }

    /// Scales a nonzero finite vector to unit length.
    pub fn normalize(mut v: Vec<f64>) -> Result<Self> {
        let norm = dot(&v, &v).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        if !norm.is_finite() {
            return Err(Error::NotUnit { norm });
        }
        v.iter_mut().for_each(|x| *x /= norm);
        Ok(UnitVector(v))
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        UnitVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn negated(&self) -> UnitVector {
        UnitVector(self.0.iter().map(|x| -x).collect())
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        UnitVector::new(v)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(v: UnitVector) -> Self {
        v.0
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            SquareMatrix::from_vec(2, vec![1.0, f64::NAN, 0.0, 1.0]),
            Err(Error::NonFinite { position: 1 })
        ));
        assert!(SquareMatrix::from_vec(2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn quad_form_and_outer() {
        let v = [0.6, 0.8];
        let m = SquareMatrix::outer(&v);
        assert!((m.quad_form(&v) - 1.0).abs() < 1e-15);
        assert!((m.frobenius_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unit_vector_checks() {
        assert!(UnitVector::new(vec![1.0, 1e-5]).is_err());
        assert!(UnitVector::new(vec![0.6, 0.8]).is_ok());
        assert!(matches!(
            UnitVector::normalize(vec![0.0; 3]),
            Err(Error::ZeroVector)
        ));
        let u = UnitVector::normalize(vec![3.0, 4.0]).unwrap();
        assert_eq!(u.as_slice(), &[0.6, 0.8]);
    }
}

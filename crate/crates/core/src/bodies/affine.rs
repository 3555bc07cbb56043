use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matrix_from_rows, matrix_to_rows, Matrix, Vector};

/// Invertible affine map `x ↦ linear · x + translation`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    linear: Matrix,
    translation: Vector,
}

/// Relative determinant threshold below which a linear part is rejected.
const SINGULAR_TOL: f64 = 1e-12;

impl AffineMap {
    pub fn new(linear: Matrix, translation: Vector) -> Result<Self> {
        let n = linear.nrows();
        if linear.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: linear.ncols() });
        }
        if translation.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: translation.len() });
        }
        let det = linear.determinant();
        let scale = linear.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if !det.is_finite() || scale == 0.0 || det.abs() <= SINGULAR_TOL * scale.powi(n as i32) {
            return Err(Error::SingularMap(det));
        }
        Ok(Self { linear, translation })
    }

    pub fn identity(n: usize) -> Self {
        Self { linear: Matrix::identity(n, n), translation: Vector::zeros(n) }
    }

    pub fn translation(t: Vector) -> Self {
        let n = t.len();
        Self { linear: Matrix::identity(n, n), translation: t }
    }

    /// Homothety `x ↦ factor · x`; negative factors give the reflected copy.
    pub fn scaling(n: usize, factor: f64) -> Result<Self> {
        Self::new(Matrix::identity(n, n) * factor, Vector::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn linear(&self) -> &Matrix {
        &self.linear
    }

    pub fn translation_part(&self) -> &Vector {
        &self.translation
    }

    pub fn det(&self) -> f64 {
        self.linear.determinant()
    }

    pub fn is_identity(&self) -> bool {
        self.translation.iter().all(|&t| t == 0.0)
            && self.linear == Matrix::identity(self.dim(), self.dim())
    }

    pub fn is_linear(&self) -> bool {
        self.translation.iter().all(|&t| t == 0.0)
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.linear * x + &self.translation
    }

    pub fn apply_linear(&self, x: &Vector) -> Vector {
        &self.linear * x
    }

    pub fn inverse(&self) -> Self {
        // Invertibility is a construction invariant.
        let inv = self.linear.clone().try_inverse().expect("affine map is invertible");
        let t = -(&inv * &self.translation);
        Self { linear: inv, translation: t }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            linear: &self.linear * &other.linear,
            translation: &self.linear * &other.translation + &self.translation,
        }
    }

    /// Inverse-transpose of the linear part, which maps normals.
    pub fn normal_map(&self) -> Matrix {
        self.linear.clone().try_inverse().expect("affine map is invertible").transpose()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let a = (&self.linear - &other.linear).amax();
        let b = (&self.translation - &other.translation).amax();
        a.max(b)
    }
}

/// Row-major JSON form.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AffineMapJson {
    pub linear: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
}

impl From<&AffineMap> for AffineMapJson {
    fn from(m: &AffineMap) -> Self {
        Self { linear: matrix_to_rows(&m.linear), translation: m.translation.iter().copied().collect() }
    }
}

impl TryFrom<&AffineMapJson> for AffineMap {
    type Error = Error;

    fn try_from(j: &AffineMapJson) -> Result<Self> {
        let linear = matrix_from_rows(&j.linear)
            .ok_or_else(|| Error::Parse("pose.linear must be a non-empty rectangular matrix".into()))?;
        AffineMap::new(linear, Vector::from_column_slice(&j.translation))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    fn sample() -> AffineMap {
        let l = Matrix::from_row_slice(2, 2, &[2.0, 1.0, -0.5, 3.0]);
        AffineMap::new(l, vector(&[1.0, -2.0])).unwrap()
    }

    #[test]
    fn rejects_singular_linear_part() {
        let l = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(AffineMap::new(l, vector(&[0.0, 0.0])), Err(Error::SingularMap(_))));
    }

    #[test]
    fn inverse_and_composition() {
        let m = sample();
        let id = m.compose(&m.inverse());
        assert!(id.max_abs_diff(&AffineMap::identity(2)) < 1e-14);
        let x = vector(&[0.3, -0.7]);
        let y = m.compose(&m).apply(&x);
        assert!((y - m.apply(&m.apply(&x))).norm() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let m = sample();
        let j = AffineMapJson::from(&m);
        assert_eq!(j.linear[0], vec![2.0, 1.0]);
        assert_eq!(AffineMap::try_from(&j).unwrap(), m);
    }
}

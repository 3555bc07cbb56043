//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub fn vector(xs: &[f64]) -> Vector {
    DVector::from_column_slice(xs)
}

/// Row-major construction, matching the JSON layout.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Option<Matrix> {
    let r = rows.len();
    if r == 0 {
        return None;
    }
    let c = rows[0].len();
    if rows.iter().any(|row| row.len() != c) {
        return None;
    }
    Some(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Vertices of a regular simplex inscribed in the unit sphere of ℝⁿ,
/// centred at the origin.
pub fn regular_simplex(n: usize) -> Vec<Vector> {
    // Standard basis of ℝⁿ⁺¹ projected to the hyperplane Σx = 0, then
    // expressed in an orthonormal basis of that hyperplane.
    let m = n + 1;
    let centred: Vec<Vector> = (0..m)
        .map(|i| {
            DVector::from_fn(m, |k, _| if k == i { 1.0 } else { 0.0 } - 1.0 / m as f64)
        })
        .collect();
    let mut basis: Vec<Vector> = Vec::with_capacity(n);
    for v in centred.iter() {
        let mut w = v.clone();
        for b in &basis {
            let d = w.dot(b);
            w -= b * d;
        }
        let norm = w.norm();
        if norm > 1e-9 {
            basis.push(w / norm);
        }
        if basis.len() == n {
            break;
        }
    }
    centred
        .iter()
        .map(|v| {
            let coords = DVector::from_fn(n, |k, _| v.dot(&basis[k]));
            let norm = coords.norm();
            coords / norm
        })
        .collect()
}

/// n-dimensional volume of the simplex spanned by `n + 1` points.
pub fn simplex_volume(points: &[Vector]) -> f64 {
    let n = points[0].len();
    debug_assert_eq!(points.len(), n + 1);
    let m = DMatrix::from_fn(n, n, |i, j| points[j + 1][i] - points[0][i]);
    let mut fact = 1.0;
    for k in 2..=n {
        fact *= k as f64;
    }
    m.determinant().abs() / fact
}

pub fn centroid(points: &[Vector]) -> Vector {
    let n = points[0].len();
    let mut c = DVector::zeros(n);
    for p in points {
        c += p;
    }
    c / points.len() as f64
}

/// Rank of `m` with singular-value threshold `tol` (relative to the largest).
pub fn rank(m: &Matrix, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Affine rank test: do the points span ℝⁿ affinely?
pub fn affinely_spanning(points: &[Vector], tol: f64) -> bool {
    if points.is_empty() {
        return false;
    }
    let n = points[0].len();
    if points.len() < n + 1 {
        return false;
    }
    let m = DMatrix::from_fn(n, points.len() - 1, |i, j| points[j + 1][i] - points[0][i]);
    rank(&m, tol) == n
}

/// Solve `m x = b` by LU, returning `None` for a (numerically) singular system.
pub fn solve(m: &Matrix, b: &Vector) -> Option<Vector> {
    m.clone().lu().solve(b)
}

pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

pub fn unit(n: usize, k: usize) -> Vector {
    DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_simplex_is_regular_and_centred() {
        for n in 2..=5 {
            let s = regular_simplex(n);
            assert_eq!(s.len(), n + 1);
            let c = centroid(&s);
            assert!(c.norm() < 1e-12);
            let edge = (&s[0] - &s[1]).norm();
            for i in 0..=n {
                assert!((s[i].norm() - 1.0).abs() < 1e-12);
                for j in 0..i {
                    assert!(((&s[i] - &s[j]).norm() - edge).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unit_triangle_volume() {
        let pts = vec![vector(&[0.0, 0.0]), vector(&[1.0, 0.0]), vector(&[0.0, 1.0])];
        assert!((simplex_volume(&pts) - 0.5).abs() < 1e-15);
    }
}

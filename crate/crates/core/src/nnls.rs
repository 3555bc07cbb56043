//! Lawson–Hanson active-set nonnegative least squares with a small Tikhonov
//! term, used to recover John-decomposition weights from contact pairs.

use nalgebra::{DMatrix, DVector};

/// Ridge term added as `√damping · I` rows below the system matrix.
pub const DEFAULT_DAMPING: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    /// `‖A x − b‖₂` of the undamped system.
    pub residual: f64,
    pub iterations: usize,
    /// A passive-set least-squares solve lost column rank.
    pub rank_deficient: bool,
}

pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> NnlsSolution {
    nnls_damped(a, b, DEFAULT_DAMPING)
}

pub fn nnls_damped(a: &DMatrix<f64>, b: &DVector<f64>, damping: f64) -> NnlsSolution {
    let (m, n) = a.shape();
    let (aa, bb) = if damping > 0.0 {
        let mut aa = DMatrix::zeros(m + n, n);
        aa.view_mut((0, 0), (m, n)).copy_from(a);
        let s = damping.sqrt();
        for j in 0..n {
            aa[(m + j, j)] = s;
        }
        let mut bb = DVector::zeros(m + n);
        bb.rows_mut(0, m).copy_from(b);
        (aa, bb)
    } else {
        (a.clone(), b.clone())
    };

    let scale = aa.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0)
        * bb.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let tol = 1e-12 * scale;

    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let mut rank_deficient = false;
    let mut iterations = 0;
    let max_iter = 30 * n.max(1);

    loop {
        let w = aa.transpose() * (&bb - &aa * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
        let Some(j) = candidate else { break };
        passive[j] = true;

        loop {
            iterations += 1;
            if iterations > max_iter {
                break;
            }
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = aa.select_columns(idx.iter());
            let (z, deficient) = least_squares(&sub, &bb);
            rank_deficient |= deficient;
            let mut s = DVector::zeros(n);
            for (k, &col) in idx.iter().enumerate() {
                s[col] = z[k];
            }
            if idx.iter().all(|&k| s[k] > 0.0) {
                x = s;
                break;
            }
            let mut alpha = f64::INFINITY;
            for &k in &idx {
                if s[k] <= 0.0 {
                    let denom = x[k] - s[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[k] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            x = &x + (&s - &x) * alpha;
            for &k in &idx {
                if x[k] <= 1e-15 {
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        if iterations > max_iter {
            break;
        }
    }

    let residual = (a * &x - b).norm();
    NnlsSolution { x, residual, iterations, rank_deficient }
}

fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, bool) {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = 1e-13 * smax.max(1e-300);
    let deficient = svd.singular_values.iter().any(|&s| s <= eps);
    let z = svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()));
    (z, deficient)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_optimum_is_returned_when_positive() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        let s = nnls_damped(&a, &b, 0.0);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 2.0).abs() < 1e-12);
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn clamps_negative_components() {
        // Unconstrained solution would be x = (-1, 2).
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_column_slice(&[-1.0, 2.0]);
        let s = nnls(&a, &b);
        assert_eq!(s.x[0], 0.0);
        assert!((s.x[1] - 2.0).abs() < 1e-9);
        assert!((s.residual - 1.0).abs() < 1e-9);
    }

    #[test]
    fn matches_brute_force_on_small_problem() {
        // Enumerate all supports for a 4x3 problem and compare.
        let a = DMatrix::from_row_slice(
            4,
            3,
            &[1.0, 2.0, -1.0, 0.5, -1.0, 2.0, 3.0, 0.0, 1.0, -2.0, 1.0, 1.0],
        );
        let b = DVector::from_column_slice(&[1.0, -2.0, 0.5, 3.0]);
        let mut best = f64::INFINITY;
        for mask in 0u32..8 {
            let idx: Vec<usize> = (0..3).filter(|k| mask & (1 << k) != 0).collect();
            let mut x = DVector::zeros(3);
            if !idx.is_empty() {
                let sub = a.select_columns(idx.iter());
                let z = sub.clone().svd(true, true).solve(&b, 1e-14).unwrap();
                if z.iter().any(|&v| v < 0.0) {
                    continue;
                }
                for (k, &c) in idx.iter().enumerate() {
                    x[c] = z[k];
                }
            }
            best = best.min((&a * &x - &b).norm());
        }
        let s = nnls_damped(&a, &b, 0.0);
        assert!(s.x.iter().all(|&v| v >= 0.0));
        assert!((s.residual - best).abs() < 1e-10, "{} vs {}", s.residual, best);
    }
}

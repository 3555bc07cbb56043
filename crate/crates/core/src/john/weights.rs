use serde::Serialize;

use super::contacts::ContactPair;
use crate::linalg::{Matrix, Vector};
use crate::nnls::nnls;

/// Residual threshold for each identity block.
pub const IDENTITY_TOL: f64 = 1e-6;
/// Allowed drift of `Σ a_i` from `n`.
pub const SUM_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Serialize)]
pub struct Residuals {
    /// `‖Σ a_i v_i u_iᵀ − I‖_F`.
    pub identity: f64,
    /// `‖Σ a_i u_i‖`.
    pub u: f64,
    /// `‖Σ a_i v_i‖`.
    pub v: f64,
    pub weight_sum: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.identity.max(self.u).max(self.v)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JohnWeights {
    pub weights: Vec<f64>,
    pub residuals: Residuals,
    pub rank_deficient: bool,
    pub success: bool,
}

pub fn residuals(pairs: &[ContactPair], weights: &[f64], n: usize) -> Residuals {
    let mut m = -Matrix::identity(n, n);
    let mut su = Vector::zeros(n);
    let mut sv = Vector::zeros(n);
    for (p, &a) in pairs.iter().zip(weights) {
        m += &p.v * p.u.transpose() * a;
        su += &p.u * a;
        sv += &p.v * a;
    }
    Residuals { identity: m.norm(), u: su.norm(), v: sv.norm(), weight_sum: weights.iter().sum() }
}

fn succeeded(r: &Residuals, n: usize) -> bool {
    r.identity <= IDENTITY_TOL && r.u <= IDENTITY_TOL && r.v <= IDENTITY_TOL && (r.weight_sum - n as f64).abs() <= SUM_TOL
}

/// Rows `vec(v uᵀ)` followed by the selected vector blocks.
fn system(pairs: &[ContactPair], n: usize, with_u: bool, with_v: bool) -> (Matrix, Vector) {
    let rows = n * n + if with_u { n } else { 0 } + if with_v { n } else { 0 };
    let mut a = Matrix::zeros(rows, pairs.len());
    for (c, p) in pairs.iter().enumerate() {
        let mut r = 0;
        for i in 0..n {
            for j in 0..n {
                a[(r, c)] = p.v[i] * p.u[j];
                r += 1;
            }
        }
        if with_u {
            for i in 0..n {
                a[(r + i, c)] = p.u[i];
            }
            r += n;
        }
        if with_v {
            for i in 0..n {
                a[(r + i, c)] = p.v[i];
            }
        }
    }
    let mut b = Vector::zeros(rows);
    for i in 0..n {
        b[i * n + i] = 1.0;
    }
    (a, b)
}

/// Carathéodory reduction: while more than `max_support` weights are
/// positive and the active columns of `a` have a null direction, moves
/// along it until a weight reaches zero. `a·x` is unchanged up to rounding.
fn reduce_support(a: &Matrix, mut x: Vec<f64>, max_support: usize) -> Vec<f64> {
    loop {
        let active: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 0.0).collect();
        let m = active.len();
        if m <= max_support {
            return x;
        }
        // Zero rows make the block square so the SVD exposes the full
        // right null space.
        let size = m.max(a.nrows());
        let mut block = Matrix::zeros(size, m);
        for (c, &i) in active.iter().enumerate() {
            block.view_mut((0, c), (a.nrows(), 1)).copy_from(&a.column(i));
        }
        let svd = block.svd(false, true);
        let Some(v_t) = svd.v_t else { return x };
        let (k, smin) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |b, (k, &s)| if s < b.1 { (k, s) } else { b });
        if smin > 1e-12 * svd.singular_values.max() {
            return x;
        }
        let mut mu: Vec<f64> = v_t.row(k).iter().copied().collect();
        if mu.iter().all(|&v| v <= 0.0) {
            mu.iter_mut().for_each(|v| *v = -*v);
        }
        let (hit, theta) = active
            .iter()
            .zip(&mu)
            .filter(|(_, &m)| m > 0.0)
            .map(|(&i, &m)| (i, x[i] / m))
            .fold((usize::MAX, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        if hit == usize::MAX {
            return x;
        }
        for (&i, &m) in active.iter().zip(&mu) {
            x[i] = (x[i] - theta * m).max(0.0);
        }
        x[hit] = 0.0;
    }
}

/// Nonnegative weights for `Σ a v uᵀ = I, Σ a u = 0, Σ a v = 0`, reduced to
/// at most `n² + n` positive entries when the support allows it.
pub fn john_weights(pairs: &[ContactPair], n: usize) -> JohnWeights {
    if pairs.is_empty() {
        let r = residuals(pairs, &[], n);
        return JohnWeights { weights: vec![], residuals: r, rank_deficient: true, success: false };
    }
    let (a, b) = system(pairs, n, true, true);
    let sol = nnls(&a, &b);
    let weights = reduce_support(&a, sol.x.iter().copied().collect(), n * n + n);
    let r = residuals(pairs, &weights, n);
    JohnWeights { success: succeeded(&r, n), weights, residuals: r, rank_deficient: sol.rank_deficient }
}

/// Weights for `Σ λ v uᵀ = I, Σ λ v = 0` in the unshifted frame, reduced
/// to a basic solution (at most `n² + n` nonzero).
pub(crate) fn unshifted_weights(pairs: &[ContactPair], n: usize) -> (Vec<f64>, f64) {
    let (a, b) = system(pairs, n, false, true);
    let sol = nnls(&a, &b);
    let x = reduce_support(&a, sol.x.iter().copied().collect(), n * n + n);
    let residual = (&a * Vector::from_column_slice(&x) - &b).norm();
    (x, residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{regular_simplex, vector};

    fn ball_pairs(n: usize) -> Vec<ContactPair> {
        regular_simplex(n).into_iter().map(|u| ContactPair { v: u.clone(), u }).collect()
    }

    #[test]
    fn equilateral_triangle_in_disk() {
        let w = john_weights(&ball_pairs(2), 2);
        assert!(w.success);
        for a in &w.weights {
            assert!((a - 2.0 / 3.0).abs() < 1e-9, "{a}");
        }
    }

    #[test]
    fn regular_simplex_in_three_ball() {
        let w = john_weights(&ball_pairs(3), 3);
        assert!(w.success);
        for a in &w.weights {
            assert!((a - 0.75).abs() < 1e-9, "{a}");
        }
        assert!((w.residuals.weight_sum - 3.0).abs() < 1e-9);
    }

    #[test]
    fn contacts_in_a_halfspace_fail() {
        let pairs: Vec<ContactPair> = [0.1f64, 0.6, 1.2]
            .iter()
            .map(|&a| {
                let u = vector(&[a.cos(), a.sin()]);
                ContactPair { v: u.clone(), u }
            })
            .collect();
        let w = john_weights(&pairs, 2);
        assert!(!w.success);
        assert!(w.residuals.max() > IDENTITY_TOL);
    }
}

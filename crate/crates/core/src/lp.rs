//! Dense two-phase simplex for the small linear programs the kernel needs
//! (support of H-polytopes, V-polytope gauges, hull reduction, asymmetry and
//! best-centre containment factors).
//!
//! Problems here have at most a few hundred rows and a few dozen columns, so
//! a full tableau is the simplest thing that is also accurate: after the
//! pivoting phase the basic solution is recomputed from the original data by
//! an LU solve.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<(Vec<f64>, f64)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, value)),
            _ => None,
        }
    }
}

/// `maximize cᵀx` subject to row constraints; variables are either free or
/// nonnegative.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    free: Vec<bool>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

const PIVOT_EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 50_000;

impl LinearProgram {
    /// All variables nonnegative.
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self { objective, free: vec![false; n], rows: Vec::new() }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::maximize(objective.into_iter().map(|c| -c).collect())
    }

    pub fn set_free(&mut self, var: usize) -> &mut Self {
        self.free[var] = true;
        self
    }

    pub fn set_all_free(&mut self) -> &mut Self {
        self.free.iter_mut().for_each(|f| *f = true);
        self
    }

    pub fn add(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        debug_assert_eq!(coeffs.len(), self.objective.len());
        self.rows.push((coeffs, rel, rhs));
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    /// Columns in standard form: split free vars, then slacks, then artificials.
    a: DMatrix<f64>,
    b: DVector<f64>,
    cost: DVector<f64>,
    /// Current tableau `B⁻¹[A | b]`.
    t: DMatrix<f64>,
    basis: Vec<usize>,
    n_struct: usize,
    first_artificial: usize,
    /// (positive column, optional negative column) per original variable.
    var_cols: Vec<(usize, Option<usize>)>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.objective.len();
        let mut var_cols = Vec::with_capacity(n);
        let mut col = 0;
        for &f in &lp.free {
            if f {
                var_cols.push((col, Some(col + 1)));
                col += 2;
            } else {
                var_cols.push((col, None));
                col += 1;
            }
        }
        let n_struct = col;
        let m = lp.rows.len();

        // Normalize so that every right-hand side is nonnegative.
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(m);
        for (coeffs, rel, rhs) in &lp.rows {
            let mut expanded = vec![0.0; n_struct];
            for (j, &(p, q)) in var_cols.iter().enumerate() {
                expanded[p] = coeffs[j];
                if let Some(q) = q {
                    expanded[q] = -coeffs[j];
                }
            }
            if *rhs < 0.0 {
                let flipped = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                rows.push((expanded.into_iter().map(|x| -x).collect(), flipped, -rhs));
            } else {
                rows.push((expanded, *rel, *rhs));
            }
        }

        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let first_artificial = n_struct + n_slack;
        let total = first_artificial + n_art;

        let mut a = DMatrix::zeros(m, total);
        let mut b = DVector::zeros(m);
        let mut basis = vec![0; m];
        let mut slack = n_struct;
        let mut art = first_artificial;
        for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
            for (j, &c) in coeffs.iter().enumerate() {
                a[(i, j)] = c;
            }
            b[i] = *rhs;
            match rel {
                Relation::Le => {
                    a[(i, slack)] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    a[(i, slack)] = -1.0;
                    slack += 1;
                    a[(i, art)] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    a[(i, art)] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }

        let mut cost = DVector::zeros(total);
        for (j, &(p, q)) in var_cols.iter().enumerate() {
            cost[p] = lp.objective[j];
            if let Some(q) = q {
                cost[q] = -lp.objective[j];
            }
        }

        let mut t = DMatrix::zeros(m, total + 1);
        t.view_mut((0, 0), (m, total)).copy_from(&a);
        t.set_column(total, &b);
        Tableau { a, b, cost, t, basis, n_struct, first_artificial, var_cols }
    }

    fn ncols(&self) -> usize {
        self.a.ncols()
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[(row, col)];
        let width = self.t.ncols();
        for j in 0..width {
            self.t[(row, j)] /= p;
        }
        for i in 0..self.t.nrows() {
            if i == row {
                continue;
            }
            let f = self.t[(i, col)];
            if f != 0.0 {
                for j in 0..width {
                    let v = self.t[(row, j)];
                    self.t[(i, j)] -= f * v;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Maximizes `cost` over columns `< limit`. Returns false if unbounded.
    fn optimize(&mut self, cost: &DVector<f64>, limit: usize) -> Result<(), ()> {
        let rhs = self.ncols();
        let scale = cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
        let mut pivots = 0;
        loop {
            // Reduced costs; Bland's rule (first improving column).
            let mut entering = None;
            for j in 0..limit {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut r = cost[j];
                for (i, &bi) in self.basis.iter().enumerate() {
                    r -= cost[bi] * self.t[(i, j)];
                }
                if r > PIVOT_EPS * scale {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return Ok(()) };

            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.t.nrows() {
                let aij = self.t[(i, col)];
                if aij > PIVOT_EPS {
                    let ratio = self.t[(i, rhs)].max(0.0) / aij;
                    match best {
                        None => best = Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-14 * (1.0 + br.abs())
                                || (ratio <= br + 1e-14 * (1.0 + br.abs())
                                    && self.basis[i] < self.basis[bi])
                            {
                                best = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = best else { return Err(()) };
            self.pivot(row, col);
            pivots += 1;
            if pivots > MAX_PIVOTS {
                return Ok(());
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        let total = self.ncols();
        let m = self.t.nrows();

        if self.first_artificial < total {
            let mut phase1 = DVector::zeros(total);
            for j in self.first_artificial..total {
                phase1[j] = -1.0;
            }
            if self.optimize(&phase1, total).is_err() {
                return LpOutcome::Infeasible;
            }
            let infeas: f64 = (0..m)
                .filter(|&i| self.basis[i] >= self.first_artificial)
                .map(|i| self.t[(i, total)])
                .sum();
            let bscale = self.b.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
            if infeas > 1e-9 * bscale {
                return LpOutcome::Infeasible;
            }
            // Drive zero-level artificials out of the basis; drop redundant rows.
            let mut keep = vec![true; m];
            for i in 0..m {
                if self.basis[i] >= self.first_artificial {
                    let col = (0..self.first_artificial)
                        .filter(|j| !self.basis.contains(j))
                        .max_by(|&x, &y| {
                            self.t[(i, x)].abs().partial_cmp(&self.t[(i, y)].abs()).unwrap()
                        });
                    match col {
                        Some(c) if self.t[(i, c)].abs() > 1e-9 => self.pivot(i, c),
                        _ => keep[i] = false,
                    }
                }
            }
            if keep.iter().any(|k| !k) {
                let rows: Vec<usize> = (0..m).filter(|&i| keep[i]).collect();
                self.t = self.t.select_rows(rows.iter());
                self.a = self.a.select_rows(rows.iter());
                self.b = self.b.select_rows(rows.iter());
                self.basis = rows.iter().map(|&i| self.basis[i]).collect();
            }
        }

        let cost = self.cost.clone();
        if self.optimize(&cost, self.first_artificial).is_err() {
            return LpOutcome::Unbounded;
        }

        let x_std = self.polished_solution();
        let mut x = vec![0.0; lp.num_vars()];
        for (j, &(p, q)) in self.var_cols.iter().enumerate() {
            x[j] = x_std[p] - q.map_or(0.0, |q| x_std[q]);
        }
        let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        let _ = self.n_struct;
        LpOutcome::Optimal { x, value }
    }

    /// Basic solution recomputed from the original columns.
    fn polished_solution(&self) -> DVector<f64> {
        let m = self.basis.len();
        let total = self.ncols();
        let mut x = DVector::zeros(total);
        if m == 0 {
            return x;
        }
        let bmat = DMatrix::from_fn(m, m, |i, k| self.a[(i, self.basis[k])]);
        match bmat.lu().solve(&self.b) {
            Some(xb) if xb.iter().all(|v| v.is_finite()) => {
                for (k, &j) in self.basis.iter().enumerate() {
                    x[j] = xb[k];
                }
            }
            _ => {
                for (k, &j) in self.basis.iter().enumerate() {
                    x[j] = self.t[(k, total)];
                }
            }
        }
        // Basic variables can only drift negative through rounding.
        for j in 0..self.first_artificial {
            if x[j] < 0.0 && x[j] > -1e-9 {
                x[j] = 0.0;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), value 36.
        let mut lp = LinearProgram::maximize(vec![3.0, 5.0]);
        lp.add(vec![1.0, 0.0], Relation::Le, 4.0)
            .add(vec![0.0, 2.0], Relation::Le, 12.0)
            .add(vec![3.0, 2.0], Relation::Le, 18.0);
        let (x, v) = lp.solve().optimal().unwrap();
        assert!((v - 36.0).abs() < 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x + y with x - y = -3, x ≥ -5 (free vars), y ≤ 10 → x=-5, y=-2.
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.set_all_free();
        lp.add(vec![1.0, -1.0], Relation::Eq, -3.0)
            .add(vec![1.0, 0.0], Relation::Ge, -5.0)
            .add(vec![0.0, 1.0], Relation::Le, 10.0);
        let (x, v) = lp.solve().optimal().unwrap();
        assert!((x[0] + 5.0).abs() < 1e-12 && (x[1] + 2.0).abs() < 1e-12);
        assert!((v - 7.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.add(vec![1.0], Relation::Le, 1.0).add(vec![1.0], Relation::Ge, 2.0);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::maximize(vec![1.0, 0.0]);
        lp.add(vec![-1.0, 1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_vertex_does_not_cycle() {
        // Many constraints active at the optimum (0,0) of max -x-y.
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.set_all_free();
        for k in 0..12 {
            let a = k as f64 * 0.5;
            lp.add(vec![a.cos(), a.sin()], Relation::Le, 1.0);
        }
        lp.add(vec![1.0, 1.0], Relation::Le, 0.0);
        let (_, v) = lp.solve().optimal().unwrap();
        assert!(v.abs() < 1e-12);
    }
}

//! Vertex/facet conversion for the small polytopes in scope.
//!
//! Vertices of `{x : ⟨nᵢ, x⟩ ≤ cᵢ}` are found by solving every n-subset of
//! constraints as equalities and keeping the feasible solutions. Facets of a
//! vertex hull are the vertices of its polar about an interior point. This is
//! combinatorial in the number of constraints but exact up to rounding, which
//! the containment certificates rely on.

use crate::error::{Error, Result};
use crate::linalg::{affinely_spanning, centroid, Matrix, Vector};
use crate::lp::{LinearProgram, Relation};

/// Facet list `⟨normal, x⟩ ≤ offset` with unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct Facets {
    pub normals: Vec<Vector>,
    pub offsets: Vec<f64>,
}

impl Facets {
    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    /// `max_i ⟨nᵢ, x⟩ − cᵢ`: nonpositive exactly on the polytope.
    pub fn max_violation(&self, x: &Vector) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, c)| n.dot(x) - c)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

const FEAS_TOL: f64 = 1e-9;
const DEDUP_TOL: f64 = 1e-9;

fn for_each_subset(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] < m - k + i) else { return };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn push_unique(points: &mut Vec<Vector>, p: Vector) {
    let scale = 1.0 + p.amax();
    if !points.iter().any(|q| (q - &p).amax() <= DEDUP_TOL * scale) {
        points.push(p);
    }
}

/// Vertices of a bounded H-polytope.
pub fn enumerate_vertices(normals: &[Vector], offsets: &[f64]) -> Vec<Vector> {
    let m = normals.len();
    if m == 0 {
        return Vec::new();
    }
    let n = normals[0].len();
    let scale = offsets.iter().fold(1.0f64, |a, c| a.max(c.abs()));
    let mut out = Vec::new();
    for_each_subset(m, n, |sub| {
        let a = Matrix::from_fn(n, n, |i, j| normals[sub[i]][j]);
        let b = Vector::from_fn(n, |i, _| offsets[sub[i]]);
        let lu = a.lu();
        let det = lu.determinant();
        if det.abs() < 1e-12 {
            return;
        }
        let Some(x) = lu.solve(&b) else { return };
        let feasible = normals
            .iter()
            .zip(offsets)
            .all(|(nv, c)| nv.dot(&x) <= c + FEAS_TOL * scale.max(x.amax()));
        if feasible {
            push_unique(&mut out, x);
        }
    });
    out
}

/// Facets of `conv(points)`; the points must affinely span ℝⁿ.
pub fn enumerate_facets(points: &[Vector]) -> Result<Facets> {
    if points.is_empty() {
        return Err(Error::DegenerateBody("empty vertex set".into()));
    }
    if !affinely_spanning(points, 1e-10) {
        return Err(Error::DegenerateBody("vertices do not affinely span the space".into()));
    }
    let c = centroid(points);
    let shifted: Vec<Vector> = points.iter().map(|p| p - &c).collect();
    let ones = vec![1.0; shifted.len()];
    let duals = enumerate_vertices(&shifted, &ones);
    if duals.is_empty() {
        return Err(Error::DegenerateBody("facet enumeration found no facets".into()));
    }
    let mut normals = Vec::with_capacity(duals.len());
    let mut offsets = Vec::with_capacity(duals.len());
    for y in duals {
        let norm = y.norm();
        normals.push(&y / norm);
        offsets.push((1.0 + y.dot(&c)) / norm);
    }
    Ok(Facets { normals, offsets })
}

/// Is `p` a convex combination of `others`?
pub fn in_convex_hull(p: &Vector, others: &[Vector]) -> bool {
    if others.is_empty() {
        return false;
    }
    let n = p.len();
    let k = others.len();
    let mut lp = LinearProgram::maximize(vec![0.0; k]);
    for i in 0..n {
        lp.add(others.iter().map(|o| o[i]).collect(), Relation::Eq, p[i]);
    }
    lp.add(vec![1.0; k], Relation::Eq, 1.0);
    match lp.solve().optimal() {
        Some((lam, _)) => {
            // Confirm feasibility on the original data.
            let mut q = Vector::zeros(n);
            for (l, o) in lam.iter().zip(others) {
                q += o * *l;
            }
            (q - p).amax() <= 1e-9 * (1.0 + p.amax())
        }
        None => false,
    }
}

/// Drops duplicates and points that are convex combinations of the rest.
pub fn reduce_to_extreme_points(points: &[Vector]) -> Vec<Vector> {
    let mut uniq: Vec<Vector> = Vec::new();
    for p in points {
        push_unique(&mut uniq, p.clone());
    }
    let mut keep: Vec<Vector> = Vec::new();
    for i in 0..uniq.len() {
        let others: Vec<Vector> = uniq
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, q)| q.clone())
            .collect();
        if !in_convex_hull(&uniq[i], &others) {
            keep.push(uniq[i].clone());
        }
    }
    keep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    #[test]
    fn subsets_are_complete() {
        let mut count = 0;
        for_each_subset(6, 3, |_| count += 1);
        assert_eq!(count, 20);
        let mut count = 0;
        for_each_subset(3, 3, |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn square_vertices_from_facets() {
        let normals = vec![vector(&[1.0, 0.0]), vector(&[-1.0, 0.0]), vector(&[0.0, 1.0]), vector(&[0.0, -1.0])];
        let v = enumerate_vertices(&normals, &[1.0; 4]);
        assert_eq!(v.len(), 4);
        assert!(v.iter().all(|p| (p[0].abs() - 1.0).abs() < 1e-12 && (p[1].abs() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn cube_facets_and_degenerate_octahedron_vertices() {
        let mut cube = Vec::new();
        for s in 0..8 {
            cube.push(vector(&[
                if s & 1 == 0 { 1.0 } else { -1.0 },
                if s & 2 == 0 { 1.0 } else { -1.0 },
                if s & 4 == 0 { 1.0 } else { -1.0 },
            ]));
        }
        let f = enumerate_facets(&cube).unwrap();
        assert_eq!(f.len(), 6);
        for (n, c) in f.normals.iter().zip(&f.offsets) {
            assert!((c - 1.0).abs() < 1e-12);
            assert!((n.amax() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_points_are_removed() {
        let pts = vec![
            vector(&[0.0, 0.0]),
            vector(&[2.0, 0.0]),
            vector(&[0.0, 2.0]),
            vector(&[0.5, 0.5]),
            vector(&[1.0, 1.0]),
            vector(&[2.0, 0.0]),
        ];
        let ext = reduce_to_extreme_points(&pts);
        assert_eq!(ext.len(), 3);
    }

    #[test]
    fn lower_dimensional_hull_is_rejected() {
        let pts = vec![vector(&[0.0, 0.0]), vector(&[1.0, 1.0]), vector(&[2.0, 2.0])];
        assert!(matches!(enumerate_facets(&pts), Err(Error::DegenerateBody(_))));
    }
}

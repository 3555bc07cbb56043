use super::factor::{best_centre, Sign};
use super::{to_vec, DistanceBound, DistanceKind, Status, Telemetry, Witness};
use crate::bodies::{contains, AffineMap, ConvexBody};
use crate::error::{Error, Result};
use crate::john::{max_volume_position_with, JohnCertificate, SolverOptions};
use crate::linalg::{centroid, Matrix, Vector};

/// Cap on improving swaps after the greedy selection.
pub const MAX_SWAPS: usize = 50;

/// Normalized volume below which a selection counts as affinely dependent.
const DEGENERACY_TOL: f64 = 1e-9;

/// `sqrt det(DᵀD)` for the edge matrix `D` from the first point.
fn spanned_volume(points: &[&Vector]) -> f64 {
    if points.len() < 2 {
        return 1.0;
    }
    let n = points[0].len();
    let d = Matrix::from_fn(n, points.len() - 1, |i, j| points[j + 1][i] - points[0][i]);
    (d.transpose() * &d).determinant().max(0.0).sqrt()
}

fn volume_of(candidates: &[Vector], idx: &[usize]) -> f64 {
    let pts: Vec<&Vector> = idx.iter().map(|&i| &candidates[i]).collect();
    spanned_volume(&pts)
}

/// `n + 1` of the candidates with large simplex volume: greedy growth from
/// the farthest pair, then single-vertex swaps while they help.
fn select_simplex(candidates: &[Vector], n: usize) -> Result<Vec<usize>> {
    let m = candidates.len();
    if m < n + 1 {
        return Err(Error::DegenerateSimplex);
    }
    let mut pair = (0, 1, -1.0);
    for i in 0..m {
        for j in i + 1..m {
            let d = (&candidates[i] - &candidates[j]).norm();
            if d > pair.2 {
                pair = (i, j, d);
            }
        }
    }
    let mut chosen = vec![pair.0, pair.1];
    while chosen.len() < n + 1 {
        let next = (0..m)
            .filter(|i| !chosen.contains(i))
            .map(|i| {
                let mut trial = chosen.clone();
                trial.push(i);
                (i, volume_of(candidates, &trial))
            })
            .fold((usize::MAX, -1.0), |b, c| if c.1 > b.1 { c } else { b });
        chosen.push(next.0);
    }
    let mut vol = volume_of(candidates, &chosen);
    let mut swaps = 0;
    'outer: while swaps < MAX_SWAPS {
        for slot in 0..=n {
            for i in 0..m {
                if chosen.contains(&i) {
                    continue;
                }
                let mut trial = chosen.clone();
                trial[slot] = i;
                let v = volume_of(candidates, &trial);
                if v > vol * (1.0 + 1e-12) {
                    chosen = trial;
                    vol = v;
                    swaps += 1;
                    continue 'outer;
                }
            }
        }
        break;
    }
    let diam = pair.2;
    if diam <= 0.0 || vol / diam.powi(n as i32) <= DEGENERACY_TOL {
        return Err(Error::DegenerateSimplex);
    }
    Ok(chosen)
}

/// Subsets examined by the exhaustive reference-simplex search.
const EXHAUSTIVE_LIMIT: usize = 20_000;

fn binomial(m: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(m - i) / (i + 1))
}

/// A maximal-volume simplex among the points, ties to the lexicographically
/// first index set. Affine maps rescale all volumes equally, so the choice
/// commutes with them. Large point sets fall back to the greedy selection.
pub(super) fn reference_simplex(points: &[Vector], n: usize) -> Result<Vec<Vector>> {
    let m = points.len();
    if m < n + 1 {
        return Err(Error::DegenerateSimplex);
    }
    let idx = if binomial(m, n + 1) <= EXHAUSTIVE_LIMIT {
        let mut best = (Vec::new(), -1.0);
        let mut comb: Vec<usize> = (0..=n).collect();
        loop {
            let v = volume_of(points, &comb);
            if v > best.1 * (1.0 + 1e-9) {
                best = (comb.clone(), v);
            }
            // Next combination in lexicographic order.
            let Some(pos) = (0..=n).rev().find(|&i| comb[i] < m - (n + 1 - i)) else { break };
            comb[pos] += 1;
            for i in pos + 1..=n {
                comb[i] = comb[i - 1] + 1;
            }
        }
        best.0
    } else {
        select_simplex(points, n)?
    };
    Ok(idx.iter().map(|&i| points[i].clone()).collect())
}

/// Affine map sending `from[i]` to `to[i]` for `n + 1` affinely independent points.
pub(super) fn simplex_map(from: &[Vector], to: &[Vector]) -> Result<AffineMap> {
    let n = from[0].len();
    let f = Matrix::from_fn(n, n, |i, j| from[j + 1][i] - from[0][i]);
    let t = Matrix::from_fn(n, n, |i, j| to[j + 1][i] - to[0][i]);
    let inv = f.try_inverse().ok_or(Error::DegenerateSimplex)?;
    let lin = t * inv;
    let tr = &to[0] - &lin * &from[0];
    AffineMap::new(lin, tr).map_err(|_| Error::DegenerateSimplex)
}

/// Upper bound on `d(K, S_n)` from the contact points of a certificate.
pub fn simplex_proximity(k: &ConvexBody, cert: Option<&JohnCertificate>) -> Result<DistanceBound> {
    simplex_proximity_with(k, cert, &SolverOptions::default())
}

/// As [`simplex_proximity`]; `opts` drives the fallback positioning.
///
/// The certificate's contact points live in the frame of the positioned
/// image `T(K)` (its `pose`), shifted by its `shift`. The witness is for the
/// ordered pair `(S_n, K)` with `S_n` the regular simplex template.
pub fn simplex_proximity_with(k: &ConvexBody, cert: Option<&JohnCertificate>, opts: &SolverOptions) -> Result<DistanceBound> {
    let n = k.dim();
    let template = ConvexBody::regular_simplex(n);
    let template_vertices = template.vertex_list()?;
    let (to_template_frame, image, simplex, positioning) = match cert {
        Some(c) => {
            if c.dim != n {
                return Err(Error::DimensionMismatch { expected: n, got: c.dim });
            }
            let pose = c.pose.clone().unwrap_or_else(|| AffineMap::identity(n));
            let image = k.transform(&pose);
            let z = c.shift_vector();
            let mut pts: Vec<Vector> = Vec::new();
            for u in &c.u {
                let p = Vector::from_column_slice(u) + &z;
                if !pts.iter().any(|q| (q - &p).amax() <= 1e-9) {
                    pts.push(p);
                }
            }
            let idx = select_simplex(&pts, n)?;
            let chosen: Vec<Vector> = idx.iter().map(|&i| pts[i].clone()).collect();
            let s = simplex_map(&template_vertices, &chosen)?;
            (pose.inverse(), image, s, None)
        }
        None => {
            let pos = max_volume_position_with(&template, k, opts)?;
            (AffineMap::identity(n), k.clone(), pos.map.clone(), Some(pos))
        }
    };
    let s_body = template.transform(&simplex);
    let facets = s_body.facets()?;
    let centre = centroid(&s_body.vertex_list()?);
    let (beta, d) = best_centre(&facets, &centre, &image, Sign::Positive)?;
    // M = (C, e) carries the image frame back to K: M(d + βx) = (Cd + (1−β)e) + βM(x).
    let m = &to_template_frame;
    let map = m.compose(&simplex);
    let d_k = m.apply_linear(&d) + m.translation_part() * (1.0 - beta);
    let witness =
        Witness { swapped: false, map, inner_shift: cert.map(|c| c.shift.clone()), outer_translation: to_vec(&d_k), r: beta, sign: Sign::Positive };
    let inner = template.transform(&witness.map);
    let outer = inner.scale(beta)?.shift(&(-&d_k));
    let a = contains(&inner, k, super::REPLAY_TOL)?;
    let b = contains(k, &outer, super::REPLAY_TOL)?;
    if !a.is_yes() || !b.is_yes() {
        return Err(Error::SolverStall("contact simplex witness failed to replay".into()));
    }
    let certified = a.is_certified_yes() && b.is_certified_yes();
    Ok(DistanceBound {
        kind: DistanceKind::BanachMazur,
        dim: n,
        k_hash: k.content_hash(),
        l_hash: template.content_hash(),
        upper: beta,
        lower: 1.0,
        upper_status: Status::from_flag(certified),
        lower_status: Status::Certified,
        witness: Some(witness),
        telemetry: Telemetry { positioning, start_value: beta, ..Telemetry::default() },
    })
}

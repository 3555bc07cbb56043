use serde::Serialize;

use super::body::ConvexBody;
use crate::error::Result;
use crate::linalg::Vector;
use crate::optim::maximize_over_sphere;

/// Outcome of an inclusion test. Only the heuristic branch can be wrong, and
/// only in the "yes" direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Containment {
    CertifiedYes,
    CertifiedNo {
        /// A point of the inner body outside the outer one.
        witness: Vec<f64>,
        /// A functional on which the inner support exceeds the outer one.
        functional: Option<Vec<f64>>,
    },
    HeuristicYes,
}

impl Containment {
    pub fn is_yes(&self) -> bool {
        !matches!(self, Containment::CertifiedNo { .. })
    }

    pub fn is_certified_yes(&self) -> bool {
        matches!(self, Containment::CertifiedYes)
    }
}

/// Direction samples for the smooth–smooth fallback.
const SEARCH_SAMPLES_2D: usize = 1440;
const SEARCH_SAMPLES_ND: usize = 4000;

/// Is `inner ⊂ outer` (with slack `tol`)?
pub fn contains(inner: &ConvexBody, outer: &ConvexBody, tol: f64) -> Result<Containment> {
    if let Ok(vertices) = inner.vertex_list() {
        for v in &vertices {
            if !outer.contains_point(v, tol)? {
                let functional = outer
                    .facets()
                    .ok()
                    .and_then(|f| {
                        f.normals
                            .iter()
                            .zip(&f.offsets)
                            .max_by(|a, b| (a.0.dot(v) - a.1).partial_cmp(&(b.0.dot(v) - b.1)).unwrap())
                            .map(|(a, _)| a.iter().copied().collect())
                    });
                return Ok(Containment::CertifiedNo { witness: v.iter().copied().collect(), functional });
            }
        }
        return Ok(Containment::CertifiedYes);
    }
    if let Ok(f) = outer.facets() {
        for (a, c) in f.normals.iter().zip(&f.offsets) {
            if inner.support(a)? > c + tol {
                let p = inner.support_point(a)?;
                return Ok(Containment::CertifiedNo {
                    witness: p.iter().copied().collect(),
                    functional: Some(a.iter().copied().collect()),
                });
            }
        }
        return Ok(Containment::CertifiedYes);
    }
    let (dir, excess) = support_excess(inner, outer)?;
    if excess > tol {
        let p = inner.support_point(&dir)?;
        return Ok(Containment::CertifiedNo {
            witness: p.iter().copied().collect(),
            functional: Some(dir.iter().copied().collect()),
        });
    }
    Ok(Containment::HeuristicYes)
}

/// `max_u h_inner(u) − h_outer(u)` over unit directions, by search.
pub fn support_excess(inner: &ConvexBody, outer: &ConvexBody) -> Result<(Vector, f64)> {
    let n = inner.dim();
    let samples = if n == 2 { SEARCH_SAMPLES_2D } else { SEARCH_SAMPLES_ND };
    let mut err = None;
    let (dir, val) = maximize_over_sphere(n, samples, 4, 0x5eed, |u| {
        match (inner.support(u), outer.support(u)) {
            (Ok(a), Ok(b)) => a - b,
            (Err(e), _) | (_, Err(e)) => {
                err = Some(e);
                f64::NEG_INFINITY
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok((dir, val))
}

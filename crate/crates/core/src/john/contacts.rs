use crate::bodies::{AffineMap, ConvexBody};
use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Contacts are positioned vertices within this gauge slack of `∂L`.
pub const CONTACT_TOL: f64 = 1e-6;
/// Pairs closer than this in both entries are merged.
pub const DEDUP_TOL: f64 = 1e-7;

/// A contact point `u ∈ ∂K ∩ ∂L` and a functional `v` supporting `L` at `u`
/// with `⟨u, v⟩ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPair {
    pub u: Vector,
    pub v: Vector,
}

impl ContactPair {
    /// The same contact seen from `K − z ⊂ L − z`.
    pub fn shifted(&self, z: &Vector) -> ContactPair {
        let d = 1.0 - z.dot(&self.v);
        ContactPair { u: &self.u - z, v: &self.v / d }
    }
}

/// Contact pairs of `pose(K)` inside `L`. Polytope `L` yields one pair per
/// facet active at a contact point, in facet order.
pub fn contact_points(k: &ConvexBody, l: &ConvexBody, pose: &AffineMap, tol: f64) -> Result<Vec<ContactPair>> {
    if !l.origin_is_interior() {
        return Err(Error::OriginNotInterior);
    }
    let facets = l.facets().ok();
    let mut pairs: Vec<ContactPair> = Vec::new();
    let mut push = |pair: ContactPair| {
        let dup = pairs.iter().any(|q| {
            (&q.u - &pair.u).amax() <= DEDUP_TOL && (&q.v - &pair.v).amax() <= DEDUP_TOL * (1.0 + q.v.amax())
        });
        if !dup {
            pairs.push(pair);
        }
    };
    for w in k.vertex_list()? {
        let u = pose.apply(&w);
        let g = l.gauge(&u)?;
        if 1.0 - g > tol {
            continue;
        }
        match &facets {
            Some(f) => {
                for (a, c) in f.normals.iter().zip(&f.offsets) {
                    let s = a.dot(&u);
                    if s / c >= 1.0 - tol {
                        push(ContactPair { v: a / s, u: u.clone() });
                    }
                }
            }
            None => {
                let normal = l.normals_at(&u, tol)?.into_iter().next().ok_or(Error::NoContacts(tol))?;
                let s = normal.dot(&u);
                if s <= 0.0 {
                    return Err(Error::OriginNotInterior);
                }
                push(ContactPair { v: normal / s, u });
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoContacts(tol));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    #[test]
    fn inscribed_square_touches_disk_four_times() {
        let sq = ConvexBody::cube(2).scale(std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let disk = ConvexBody::euclidean_ball(2);
        let pairs = contact_points(&sq, &disk, &AffineMap::identity(2), CONTACT_TOL).unwrap();
        assert_eq!(pairs.len(), 4);
        for p in &pairs {
            assert!((p.u.dot(&p.v) - 1.0).abs() < 1e-12);
            assert!((&p.u - &p.v).amax() < 1e-12);
        }
    }

    #[test]
    fn polytope_container_gives_one_pair_per_active_facet() {
        let k = ConvexBody::vpolytope(vec![vector(&[1.0, 1.0]), vector(&[-0.5, 0.2]), vector(&[0.3, -0.7])]).unwrap();
        let l = ConvexBody::cube(2);
        let pairs = contact_points(&k, &l, &AffineMap::identity(2), CONTACT_TOL).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].u, pairs[1].u);
    }

    #[test]
    fn interior_body_has_no_contacts() {
        let k = ConvexBody::regular_simplex(2).scale(0.5).unwrap();
        let r = contact_points(&k, &ConvexBody::euclidean_ball(2), &AffineMap::identity(2), CONTACT_TOL);
        assert!(matches!(r, Err(Error::NoContacts(_))));
    }

    #[test]
    fn shifted_pair_stays_normalized() {
        let p = ContactPair { u: vector(&[1.0, 0.0]), v: vector(&[1.0, 0.0]) };
        let q = p.shifted(&vector(&[0.25, 0.4]));
        assert!((q.u.dot(&q.v) - 1.0).abs() < 1e-15);
    }
}

//! John's position of a polytope inside a convex body: maximal-volume
//! placement, contact pairs, decomposition weights and the shift that puts
//! the pair into John's position.

mod certificate;
mod contacts;
mod position;
mod weights;

pub use certificate::{boundary_defect, verify_decomposition, Check, DecompositionReport, JohnCertificate, ShiftMethod, VERIFY_TOL};
pub use contacts::{contact_points, ContactPair, CONTACT_TOL, DEDUP_TOL};
pub use position::{barrier_gradient_check, max_volume_position, max_volume_position_with, Positioning, SolverOptions};
pub use weights::{john_weights, residuals, JohnWeights, Residuals, IDENTITY_TOL, SUM_TOL};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bodies::{AffineMap, ConvexBody};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::optim::nelder_mead;

/// Centres tried by the fallback search.
pub const SEARCH_RESTARTS: usize = 20;

fn shifted_pairs(pairs: &[ContactPair], z: &Vector) -> Option<Vec<ContactPair>> {
    if pairs.iter().any(|p| 1.0 - z.dot(&p.v) <= 0.0) {
        return None;
    }
    Some(pairs.iter().map(|p| p.shifted(z)).collect())
}

/// Keeps pairs with positive weight.
fn support_of(pairs: Vec<ContactPair>, weights: Vec<f64>) -> (Vec<ContactPair>, Vec<f64>) {
    pairs.into_iter().zip(weights).filter(|(_, a)| *a > 0.0).unzip()
}

/// Finds `z` such that `K − z` is in John's position inside `L − z`.
/// `k` is the positioned image; `0 ∈ int L`. Contacts are boundary pairs
/// within `contact_tol`.
pub fn decomposition_shift(k: &ConvexBody, l: &ConvexBody, contact_tol: f64) -> Result<(Vector, JohnCertificate)> {
    let n = k.dim();
    let pairs = contact_points(k, l, &AffineMap::identity(n), contact_tol)?;

    // λ with Σλ v uᵀ = I, Σλ v = 0 transfers to a' = λ(1 − ⟨z,v⟩) at
    // z = Σλu/(n+1), where all three identities hold.
    let (lambda, _) = weights::unshifted_weights(&pairs, n);
    let mut z = Vector::zeros(n);
    for (p, a) in pairs.iter().zip(&lambda) {
        z += &p.u * *a;
    }
    z /= (n + 1) as f64;
    if let Some(sp) = shifted_pairs(&pairs, &z) {
        let a: Vec<f64> = pairs.iter().zip(&lambda).map(|(p, l)| l * (1.0 - z.dot(&p.v))).collect();
        let (sp, a) = support_of(sp, a);
        let r = residuals(&sp, &a, n);
        if r.max() <= IDENTITY_TOL && (r.weight_sum - n as f64).abs() <= SUM_TOL && a.len() <= n * n + n {
            return Ok((z.clone(), JohnCertificate::new(n, &sp, a, &z, ShiftMethod::ClosedForm)));
        }
        let w = john_weights(&sp, n);
        let (sp, a) = support_of(sp, w.weights);
        if w.success && a.len() <= n * n + n {
            return Ok((z.clone(), JohnCertificate::new(n, &sp, a, &z, ShiftMethod::ShiftedNnls)));
        }
    }
    search_shift(k, &pairs, n)
}

fn search_shift(k: &ConvexBody, pairs: &[ContactPair], n: usize) -> Result<(Vector, JohnCertificate)> {
    let ratio = n as f64 / (n + 1) as f64;
    let scaled = k.scale(ratio)?;
    let objective = |z: &Vector| -> f64 {
        let outside = scaled.contains_point(z, 0.0).map(|c| !c).unwrap_or(true);
        match shifted_pairs(pairs, z) {
            Some(sp) if !outside => john_weights(&sp, n).residuals.max(),
            _ => f64::INFINITY,
        }
    };
    let verts = scaled.vertex_list()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a11);
    let mut best: Option<(Vector, f64)> = None;
    for r in 0..SEARCH_RESTARTS {
        let start = if r == 0 {
            scaled.interior_point()
        } else {
            let mut w: Vec<f64> = verts.iter().map(|_| -rng.gen_range(f64::MIN_POSITIVE..1.0).ln()).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
            verts.iter().zip(&w).fold(Vector::zeros(n), |acc, (v, a)| acc + v * *a)
        };
        let res = nelder_mead(&objective, &start, 0.05, 400 * n, 1e-14);
        if best.as_ref().map_or(true, |b| res.value < b.1) {
            best = Some((res.x, res.value));
        }
        if best.as_ref().is_some_and(|b| b.1 <= IDENTITY_TOL) {
            break;
        }
    }
    let (z, value) = best.expect("at least one restart");
    if let Some(sp) = shifted_pairs(pairs, &z) {
        let w = john_weights(&sp, n);
        let (sp, a) = support_of(sp, w.weights);
        if w.success && a.len() <= n * n + n {
            return Ok((z.clone(), JohnCertificate::new(n, &sp, a, &z, ShiftMethod::Search)));
        }
    }
    Err(Error::SearchFailed { residual: value, best_shift: z.iter().copied().collect() })
}

/// Everything produced by positioning `K` in `L`.
#[derive(Debug, Clone)]
pub struct JohnResult {
    pub positioning: Positioning,
    /// `T(K)` in the coordinates of `L`.
    pub image: ConvexBody,
    pub certificate: JohnCertificate,
}

impl JohnResult {
    pub fn shift(&self) -> Vector {
        self.certificate.shift_vector()
    }
}

/// Max-volume position, contacts and decomposition shift in one pass. When
/// `0 ∉ int L` the work is done about an interior point of `L` and the shift
/// is reported in the original coordinates.
pub fn john_position(k: &ConvexBody, l: &ConvexBody, opts: &SolverOptions) -> Result<JohnResult> {
    let positioning = max_volume_position_with(k, l, opts)?;
    let image = k.transform(&positioning.map);
    let p = if l.origin_is_interior() { Vector::zeros(l.dim()) } else { l.interior_point() };
    let (z, mut certificate) = decomposition_shift(&image.shift(&p), &l.shift(&p), opts.contact_tol)?;
    certificate.shift = (z + &p).iter().copied().collect();
    certificate.pose = Some(positioning.map.clone());
    certificate.solver = Some(positioning.clone());
    Ok(JohnResult { positioning, image, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{contains, Containment};
    use crate::linalg::{vector, Matrix};

    fn rotation(a: f64) -> Matrix {
        Matrix::from_row_slice(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()])
    }

    #[test]
    fn simplex_in_disk_gets_equal_weights() {
        let k = ConvexBody::regular_simplex(2)
            .transform(&AffineMap::new(rotation(0.4) * 0.3, vector(&[0.2, -0.1])).unwrap());
        let r = john_position(&k, &ConvexBody::euclidean_ball(2), &SolverOptions::default()).unwrap();
        let c = &r.certificate;
        assert_eq!(c.len(), 3);
        for a in &c.weights {
            assert!((a - 2.0 / 3.0).abs() < 1e-5, "{a}");
        }
        assert!(c.shift_vector().norm() < 1e-5);
        assert!(verify_decomposition(c, 2, VERIFY_TOL).passed());
    }

    #[test]
    fn square_in_disk_is_centred() {
        let r = john_position(&ConvexBody::cube(2), &ConvexBody::euclidean_ball(2), &SolverOptions::default()).unwrap();
        assert_eq!(r.certificate.len(), 4);
        assert!(r.shift().norm() < 1e-5);
        for v in r.image.vertex_list().unwrap() {
            assert!((v.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn triangle_in_quadrilateral_sandwich() {
        let k = ConvexBody::vpolytope(vec![vector(&[0.3, 0.1]), vector(&[2.0, 0.4]), vector(&[0.7, 1.5])]).unwrap();
        let l = ConvexBody::vpolytope(vec![
            vector(&[1.2, -0.3]),
            vector(&[0.4, 1.1]),
            vector(&[-0.9, 0.6]),
            vector(&[-0.5, -1.0]),
        ])
        .unwrap();
        let r = john_position(&k, &l, &SolverOptions::default()).unwrap();
        let c = &r.certificate;
        assert!(c.len() >= 3 && c.len() <= 6);
        assert!(c.max_residual() <= 1e-5);
        assert!(verify_decomposition(c, 2, VERIFY_TOL).passed());
        assert!(boundary_defect(c, &r.image, &l).unwrap() < 1e-5);
        let z = r.shift();
        assert!(r.image.scale(2.0 / 3.0).unwrap().contains_point(&z, 1e-6).unwrap());
        let kz = r.image.shift(&z);
        let lz = l.shift(&z);
        assert_eq!(contains(&kz, &lz, 1e-9).unwrap(), Containment::CertifiedYes);
        assert_eq!(contains(&lz, &kz.scale(-2.0).unwrap(), 1e-6).unwrap(), Containment::CertifiedYes);
    }
}

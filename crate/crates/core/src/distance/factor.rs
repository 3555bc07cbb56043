use serde::Serialize;

use crate::bodies::{contains, ConvexBody, Facets};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::lp::{LinearProgram, Relation};
use crate::optim::maximize_over_sphere;

/// Orientation of the outer homothet: `L ⊂ d + sign·r·K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(into = "i8")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }

    pub fn both() -> [Sign; 2] {
        [Sign::Positive, Sign::Negative]
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Factor {
    pub value: f64,
    pub certified: bool,
}

/// Direction samples for smooth–smooth factor searches.
const SMOOTH_SAMPLES_2D: usize = 1440;
const SMOOTH_SAMPLES_ND: usize = 4000;

/// `max_{y ∈ L} ‖sign·y‖_K`: exact from L's vertices or K's facets,
/// otherwise a search over support points of `L`.
pub(crate) fn outer_factor(k: &ConvexBody, l: &ConvexBody, sign: Sign) -> Result<Factor> {
    let s = sign.value();
    if let Ok(f) = k.facets() {
        if f.offsets.iter().any(|&c| c <= 0.0) {
            return Err(Error::OriginNotInterior);
        }
        let mut r = 0.0f64;
        for (a, c) in f.normals.iter().zip(&f.offsets) {
            r = r.max(l.support(&(a * s))? / c);
        }
        return Ok(Factor { value: r, certified: true });
    }
    if let Ok(vs) = l.vertex_list() {
        let mut r = 0.0f64;
        for v in &vs {
            r = r.max(k.gauge(&(v * s))?);
        }
        return Ok(Factor { value: r, certified: true });
    }
    let n = k.dim();
    let samples = if n == 2 { SMOOTH_SAMPLES_2D } else { SMOOTH_SAMPLES_ND };
    let mut err = None;
    let (_, r) = maximize_over_sphere(n, samples, 4, 0xfac7, |u| {
        match l.support_point(u).and_then(|y| k.gauge(&(y * s))) {
            Ok(g) => g,
            Err(e) => {
                err = Some(e);
                f64::NEG_INFINITY
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(Factor { value: r, certified: false })
}

/// Least `r` with `L ⊂ sign·r·K`, for `K ⊂ L` and `0 ∈ int K`.
pub fn containment_factor(k: &ConvexBody, l: &ConvexBody, sign: Sign) -> Result<Factor> {
    if !contains(k, l, 1e-7)?.is_yes() {
        return Err(Error::NotNested);
    }
    if !k.origin_is_interior() {
        return Err(Error::OriginNotInterior);
    }
    outer_factor(k, l, sign)
}

/// `max_{x ∈ K} ‖x‖_L`, the factor that shrinks `K` about the origin into `L`.
pub(crate) fn inner_factor(k: &ConvexBody, l: &ConvexBody) -> Result<Factor> {
    outer_factor(l, k, Sign::Positive)
}

/// Smallest `β` and translation `d` with `L ⊂ d + sign·β·K` for polytope `K`.
/// The LP solution is re-evaluated exactly at the returned `d`.
pub(crate) fn best_centre(k_facets: &Facets, k_interior: &Vector, l: &ConvexBody, sign: Sign) -> Result<(f64, Vector)> {
    let s = sign.value();
    let n = k_interior.len();
    let q = k_interior;
    // Work with K − q so every offset is positive.
    let offsets: Vec<f64> = k_facets.normals.iter().zip(&k_facets.offsets).map(|(a, c)| c - a.dot(q)).collect();
    if offsets.iter().any(|&c| c <= 0.0) {
        return Err(Error::DegenerateBody("centre point is not interior".into()));
    }
    let supports: Vec<f64> =
        k_facets.normals.iter().map(|a| l.support(&(a * s))).collect::<Result<_>>()?;
    // h_L(s aᵢ) ≤ β cᵢ + s⟨aᵢ, d̃⟩ for all i; minimize β.
    let mut obj = vec![0.0; n + 1];
    obj[0] = 1.0;
    let mut lp = LinearProgram::minimize(obj);
    for j in 1..=n {
        lp.set_free(j);
    }
    for ((a, c), h) in k_facets.normals.iter().zip(&offsets).zip(&supports) {
        let mut row = vec![*c];
        row.extend(a.iter().map(|x| s * x));
        lp.add(row, Relation::Ge, *h);
    }
    let (x, _) = lp.solve().optimal().ok_or(Error::Infeasible)?;
    let dt = Vector::from_column_slice(&x[1..]);
    let beta = k_facets
        .normals
        .iter()
        .zip(&offsets)
        .zip(&supports)
        .map(|((a, c), h)| (h - s * a.dot(&dt)) / c)
        .fold(f64::NEG_INFINITY, f64::max);
    // L ⊂ d̃ + sβ(K − q) = (d̃ − sβq) + sβK.
    let d = dt - q * (s * beta);
    Ok((beta, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    #[test]
    fn body_in_itself_has_factor_one() {
        let sq = ConvexBody::cube(2);
        assert!((containment_factor(&sq, &sq, Sign::Positive).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inscribed_simplex_in_disk_needs_two_negatively() {
        let s = ConvexBody::regular_simplex(2);
        let disk = ConvexBody::euclidean_ball(2);
        let f = containment_factor(&s, &disk, Sign::Negative).unwrap();
        assert!((f.value - 2.0).abs() < 1e-12 && f.certified);
    }

    #[test]
    fn inscribed_square_in_disk_needs_sqrt_two() {
        let sq = ConvexBody::cube(2).scale(std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let f = containment_factor(&sq, &ConvexBody::euclidean_ball(2), Sign::Positive).unwrap();
        assert!((f.value - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn non_nested_pair_is_rejected() {
        let big = ConvexBody::cube(2).scale(2.0).unwrap();
        assert!(matches!(
            containment_factor(&big, &ConvexBody::euclidean_ball(2), Sign::Positive),
            Err(Error::NotNested)
        ));
    }

    #[test]
    fn smooth_pair_is_heuristic() {
        let small = ConvexBody::lp_ball(2, 4.0).unwrap().scale(0.5).unwrap();
        let disk = ConvexBody::euclidean_ball(2);
        let f = containment_factor(&small, &disk, Sign::Positive).unwrap();
        assert!(!f.certified);
        // ‖y‖_4 ≤ ‖y‖_2 with equality on the axes.
        let expect = 2.0;
        assert!((f.value - expect).abs() < 1e-6, "{} vs {expect}", f.value);
    }

    #[test]
    fn best_centre_beats_fixed_centre() {
        let tri = ConvexBody::vpolytope(vec![vector(&[0.0, 0.0]), vector(&[1.0, 0.0]), vector(&[0.0, 1.0])]).unwrap();
        let f = tri.facets().unwrap();
        let (beta, d) = best_centre(&f, &vector(&[0.3, 0.3]), &tri, Sign::Negative).unwrap();
        assert!((beta - 2.0).abs() < 1e-9, "{beta}");
        // d + (−2)·T contains T.
        let outer = tri.scale(-beta).unwrap().shift(&(-&d));
        assert!(contains(&tri, &outer, 1e-9).unwrap().is_certified_yes());
    }
}

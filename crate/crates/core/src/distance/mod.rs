//! Upper and lower bounds for the Banach–Mazur and Grünbaum distances.
//!
//! Every upper bound carries a witness `(T, d, r, sign)` meaning
//! `T(A) ⊂ B ⊂ d + sign·r·T(A)`, where `(A, B)` is `(K, L)` or, when
//! `swapped`, `(L, K)`. Replaying the witness with [`contains`] re-certifies
//! the bound.

mod factor;
mod proximity;

pub use factor::{containment_factor, Factor, Sign};
pub use proximity::{simplex_proximity, simplex_proximity_with, MAX_SWAPS};
use proximity::{reference_simplex, simplex_map};

use serde::{Serialize, Serializer};

use crate::bodies::{asymmetry_constant, contains, AffineMap, AffineMapJson, Containment, ConvexBody, Facets, Shape};
use crate::error::{Error, Result};
use crate::john::{john_position, Positioning, SolverOptions};
use crate::linalg::{centroid, Matrix, Vector};
use crate::lp::{LinearProgram, Relation};
use crate::optim::gaussian;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use factor::{best_centre, inner_factor, outer_factor};

/// Inclusion slack used when replaying witnesses.
pub const REPLAY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct DistanceOptions {
    pub solver: SolverOptions,
    /// Coordinate-descent sweeps over the affine map.
    pub refine_steps: usize,
    pub step_decay: f64,
    /// First step, as a fraction of the reference simplex.
    pub initial_step: f64,
    /// Max-volume end points refined: the best one plus alternatives.
    pub refine_starts: usize,
    pub refine_seed: u64,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions {
            solver: SolverOptions::default(),
            refine_steps: 200,
            step_decay: 0.8,
            initial_step: 0.1,
            refine_starts: 4,
            refine_seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    BanachMazur,
    Grunbaum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Certified,
    Heuristic,
}

impl Status {
    fn from_flag(certified: bool) -> Self {
        if certified {
            Status::Certified
        } else {
            Status::Heuristic
        }
    }
}

fn serialize_map<S: Serializer>(m: &AffineMap, s: S) -> std::result::Result<S::Ok, S::Error> {
    AffineMapJson::from(m).serialize(s)
}

fn to_vec(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    /// The map positions `L` inside `K` instead of `K` inside `L`.
    pub swapped: bool,
    #[serde(serialize_with = "serialize_map")]
    pub map: AffineMap,
    /// Decomposition shift of the positioned pair, when one was computed.
    pub inner_shift: Option<Vec<f64>>,
    pub outer_translation: Vec<f64>,
    /// Positive; the orientation is in `sign`.
    pub r: f64,
    pub sign: Sign,
}

impl Witness {
    /// `T(A)` and the outer homothet `d + sign·r·T(A)`.
    fn bodies(&self, a: &ConvexBody) -> Result<(ConvexBody, ConvexBody)> {
        let inner = a.transform(&self.map);
        let d = Vector::from_column_slice(&self.outer_translation);
        let homothet = inner.scale(self.sign.value() * self.r)?.shift(&(-d));
        Ok((inner, homothet))
    }
}

/// Re-checks both inclusions of a witness for the pair `(K, L)`.
pub fn replay_witness(k: &ConvexBody, l: &ConvexBody, w: &Witness) -> Result<[Containment; 2]> {
    let (a, b) = if w.swapped { (l, k) } else { (k, l) };
    let (inner, homothet) = w.bodies(a)?;
    Ok([contains(&inner, b, REPLAY_TOL)?, contains(b, &homothet, REPLAY_TOL)?])
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Telemetry {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positioning: Option<Positioning>,
    /// `min r` with `L − z ⊂ ±r(T(K) − z)` at the decomposition shift `z`,
    /// for sign +1 and −1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factors_at_shift: Option<[f64; 2]>,
    /// Best-centre factor at the max-volume position, before refinement.
    pub start_value: f64,
    pub refine_sweeps: usize,
    pub refine_evaluations: usize,
    pub refine_improvements: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceBound {
    pub kind: DistanceKind,
    pub dim: usize,
    pub k_hash: String,
    pub l_hash: String,
    pub upper: f64,
    pub lower: f64,
    pub upper_status: Status,
    pub lower_status: Status,
    pub witness: Option<Witness>,
    pub telemetry: Telemetry,
}

impl DistanceBound {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("distance bound is serializable")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    pub value: f64,
    pub certified: bool,
    /// At least one body has asymmetry 1.
    pub symmetric_pair: bool,
}

/// `max(s(K)/s(L), s(L)/s(K))`.
pub fn distance_lower_via_asymmetry(k: &ConvexBody, l: &ConvexBody) -> Result<LowerBound> {
    let a = asymmetry_constant(k)?;
    let b = asymmetry_constant(l)?;
    let value = (a.value / b.value).max(b.value / a.value).max(1.0);
    let certified = a.certified && b.certified;
    let symmetric_pair = certified && (a.value <= 1.0 + 1e-12 || b.value <= 1.0 + 1e-12);
    Ok(LowerBound { value, certified, symmetric_pair })
}

/// One refined candidate: `T(P) ⊂ Q ⊂ d + sign·β·T(P)`.
#[derive(Debug, Clone)]
struct Candidate {
    map: AffineMap,
    beta: f64,
    d: Vector,
    sign: Sign,
}

/// Largest `λ` and a `b` with `λ·A·P + b ⊂ Q`, for polytope `Q`. The
/// translation is free, so the result depends on the linear part only.
fn inner_fit(p_vertices: &[Vector], q_facets: &Facets, lin: &Matrix) -> Option<(f64, Vector)> {
    let n = lin.nrows();
    let mut obj = vec![0.0; n + 1];
    obj[0] = 1.0;
    let mut lp = LinearProgram::maximize(obj);
    for j in 1..=n {
        lp.set_free(j);
    }
    let images: Vec<Vector> = p_vertices.iter().map(|w| lin * w).collect();
    for (a, e) in q_facets.normals.iter().zip(&q_facets.offsets) {
        for y in &images {
            let mut row = vec![a.dot(y)];
            row.extend(a.iter().copied());
            lp.add(row, Relation::Le, *e);
        }
    }
    let (x, lambda) = lp.solve().optimal()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return None;
    }
    let b = Vector::from_column_slice(&x[1..]);
    // Undo LP round-off exactly: shrink about the image's vertex centroid
    // until every vertex is inside.
    let c = centroid(&images) * lambda + &b;
    let slack: Vec<f64> = q_facets.normals.iter().zip(&q_facets.offsets).map(|(a, e)| e - a.dot(&c)).collect();
    if slack.iter().any(|&s| s <= 0.0) {
        return None;
    }
    let excess = images
        .iter()
        .flat_map(|y| q_facets.normals.iter().zip(&slack).map(move |(a, s)| (a, s, y)))
        .map(|(a, s, y)| a.dot(&(y * lambda + &b - &c)) / s)
        .fold(0.0f64, f64::max);
    if excess <= 1.0 {
        return Some((lambda, b));
    }
    Some((lambda / excess, &c + (&b - &c) / excess))
}

/// Places `T(P)` inside `Q` touching the boundary and finds the best outer
/// homothet for each sign. For polytope `Q` the placement is the largest
/// homothet of `A·P` (translation re-optimized); otherwise `T(P)` shrinks
/// about its vertex centroid. Every step is affinely equivariant.
fn evaluate(p: &ConvexBody, q: &ConvexBody, t: &AffineMap, signs: &[Sign]) -> Option<Candidate> {
    let n = p.dim();
    let map = match q.facets() {
        Ok(qf) => {
            let (lambda, b) = inner_fit(&p.vertex_list().ok()?, &qf, t.linear())?;
            AffineMap::new(t.linear() * lambda, b).ok()?
        }
        Err(_) => {
            let image = p.transform(t);
            let c = centroid(&image.vertex_list().ok()?);
            let s_in = inner_factor(&image.shift(&c), &q.shift(&c)).ok()?.value;
            if !(s_in.is_finite() && s_in > 0.0) {
                return None;
            }
            AffineMap::translation(c.clone())
                .compose(&AffineMap::scaling(n, 1.0 / s_in).ok()?)
                .compose(&AffineMap::translation(-&c))
                .compose(t)
        }
    };
    let image = p.transform(&map);
    let facets = image.facets().ok()?;
    let c = centroid(&image.vertex_list().ok()?);
    let mut best: Option<Candidate> = None;
    for &sign in signs {
        if let Ok((beta, d)) = best_centre(&facets, &c, q, sign) {
            if best.as_ref().map_or(true, |b| beta < b.beta) {
                best = Some(Candidate { map: map.clone(), beta, d, sign });
            }
        }
    }
    best
}

struct Refined {
    best: Candidate,
    start_value: f64,
    sweeps: usize,
    evaluations: usize,
    improvements: usize,
}

/// Step size at which the refinement stops.
const MIN_STEP: f64 = 1e-9;

/// Pattern search over affine maps. A map is described by the images `y_j`
/// of a reference simplex of `P`; a move adds `h·Σ c_ji (y_i − ȳ)` to every
/// `y_j`. The directions are the coordinate moves plus `n + 1` seeded random
/// combinations per sweep, all expressed in these intrinsic coordinates, so
/// the search commutes with affine changes of frame. `h` decays after a
/// sweep without progress.
fn refine(p: &ConvexBody, q: &ConvexBody, start: &AffineMap, signs: &[Sign], opts: &DistanceOptions) -> Result<Refined> {
    let n = p.dim();
    let dims = n * n + n;
    let refs = reference_simplex(&p.vertex_list()?, n)?;
    let mut best = evaluate(p, q, start, signs)
        .ok_or_else(|| Error::SolverStall("no outer homothet at the max-volume position".into()))?;
    let start_value = best.beta;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.refine_seed);
    let mut h = opts.initial_step;
    let (mut sweeps, mut evaluations, mut improvements) = (0, 1, 0);
    while sweeps < opts.refine_steps && h > MIN_STEP {
        sweeps += 1;
        let mut directions: Vec<Vec<f64>> = (0..dims).map(|c| (0..dims).map(|k| if k == c { 1.0 } else { 0.0 }).collect()).collect();
        for _ in 0..n + 1 {
            let g: Vec<f64> = (0..dims).map(|_| gaussian(&mut rng)).collect();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            directions.push(g.into_iter().map(|x| x / norm).collect());
        }
        let mut improved = false;
        for dir in &directions {
            for sgn in [1.0, -1.0] {
                let y0: Vec<Vector> = refs.iter().map(|s| best.map.apply(s)).collect();
                let ybar = centroid(&y0);
                let basis: Vec<Vector> = (0..n).map(|i| &y0[i] - &ybar).collect();
                let y: Vec<Vector> = y0
                    .iter()
                    .enumerate()
                    .map(|(j, yj)| (0..n).fold(yj.clone(), |acc, i| acc + &basis[i] * (sgn * h * dir[j * n + i])))
                    .collect();
                let Ok(t) = simplex_map(&refs, &y) else { continue };
                evaluations += 1;
                if let Some(cand) = evaluate(p, q, &t, signs) {
                    if cand.beta < best.beta - 1e-15 {
                        best = cand;
                        improved = true;
                        improvements += 1;
                        break;
                    }
                }
            }
        }
        if !improved {
            h *= opts.step_decay;
        }
    }
    Ok(Refined { best, start_value, sweeps, evaluations, improvements })
}

/// Canonical form of a smooth body: `(B, M)` with `M(B)` equal to the body.
fn canonical(body: &ConvexBody) -> Result<(ConvexBody, AffineMap)> {
    let n = body.dim();
    match body.shape() {
        Shape::LpBall { p } => Ok((ConvexBody::lp_ball(n, *p)?, body.pose().clone())),
        Shape::Ellipsoid { shape, .. } => {
            // Q = LLᵀ; x = L⁻ᵀu maps the unit ball onto {xᵀQx ≤ 1}.
            let chol = shape.clone().cholesky().ok_or_else(|| Error::DegenerateBody("ellipsoid".into()))?;
            let lin = chol.l().transpose().try_inverse().ok_or(Error::SingularMap(0.0))?;
            let map = AffineMap::new(lin, body.pose().translation_part().clone())?;
            Ok((ConvexBody::euclidean_ball(n), map))
        }
        _ => {
            let c = body.interior_point();
            Ok((body.shift(&c), AffineMap::translation(c)))
        }
    }
}

#[derive(Clone)]
struct Outcome {
    best: Candidate,
    certified: bool,
    swapped: bool,
    inner_shift: Option<Vector>,
    telemetry: Telemetry,
}

/// Both bodies smooth: canonical forms placed concentrically, factors by
/// direction search.
fn smooth_pair(k: &ConvexBody, l: &ConvexBody, signs: &[Sign]) -> Result<Outcome> {
    let n = k.dim();
    let (kc, mk) = canonical(k)?;
    let (lc, ml) = canonical(l)?;
    let s_in = inner_factor(&kc, &lc)?;
    let mut best: Option<(f64, Sign, bool)> = None;
    for &sign in signs {
        let f = outer_factor(&kc, &lc, sign)?;
        let r = s_in.value * f.value;
        if best.map_or(true, |b| r < b.0) {
            best = Some((r, sign, s_in.certified && f.certified));
        }
    }
    let (r, sign, certified) = best.expect("at least one sign");
    // T = M_L ∘ (1/s_in) ∘ M_K⁻¹ sends K into L; L ⊂ M_L(sign·r·(1/s_in)·K_c).
    let map = ml.compose(&AffineMap::scaling(n, 1.0 / s_in.value)?).compose(&mk.inverse());
    let e = ml.translation_part();
    let d = e * (1.0 - sign.value() * r);
    Ok(Outcome {
        best: Candidate { map, beta: r, d, sign },
        certified,
        swapped: false,
        inner_shift: None,
        telemetry: Telemetry { start_value: r, ..Telemetry::default() },
    })
}

/// Positions the polytope `p` in `q`, then refines; returns one outcome per
/// sign set in `sign_sets`, all sharing the positioning.
fn polytope_pipeline(
    p: &ConvexBody,
    q: &ConvexBody,
    sign_sets: &[&[Sign]],
    opts: &DistanceOptions,
) -> Result<Vec<(Candidate, Telemetry, Vector)>> {
    // Facets and vertices are cached once; affine images inherit them.
    let _ = p.facets()?;
    let _ = p.vertex_list()?;
    let c = if q.origin_is_interior() { Vector::zeros(q.dim()) } else { q.interior_point() };
    let qc = q.shift(&c);
    let jr = john_position(p, &qc, &opts.solver)?;
    let z = jr.shift();
    let kz = jr.image.shift(&z);
    let lz = qc.shift(&z);
    let factors = [
        outer_factor(&kz, &lz, Sign::Positive)?.value,
        outer_factor(&kz, &lz, Sign::Negative)?.value,
    ];
    let mut out = Vec::new();
    let starts: Vec<&AffineMap> = std::iter::once(&jr.positioning.map)
        .chain(&jr.positioning.alternatives)
        .take(opts.refine_starts.max(1))
        .collect();
    for signs in sign_sets {
        let mut r = refine(p, &qc, starts[0], signs, opts)?;
        for s in &starts[1..] {
            if let Ok(alt) = refine(p, &qc, s, signs, opts) {
                if alt.best.beta < r.best.beta {
                    r = Refined { start_value: r.start_value, ..alt };
                }
            }
        }
        let mut best = r.best;
        // Back to world coordinates: Q = Qc + c.
        best.map = AffineMap::translation(c.clone()).compose(&best.map);
        best.d = &best.d + &c * (1.0 - best.sign.value() * best.beta);
        let telemetry = Telemetry {
            positioning: Some(jr.positioning.clone()),
            factors_at_shift: Some(factors),
            start_value: r.start_value,
            refine_sweeps: r.sweeps,
            refine_evaluations: r.evaluations,
            refine_improvements: r.improvements,
        };
        out.push((best, telemetry, &z + &c));
    }
    Ok(out)
}

/// Upper bounds for `(sign sets)`, choosing which body is positioned.
fn upper_outcomes(k: &ConvexBody, l: &ConvexBody, sign_sets: &[&[Sign]], opts: &DistanceOptions) -> Result<Vec<Outcome>> {
    if k.dim() != l.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), got: l.dim() });
    }
    let positionable = |b: &ConvexBody| b.vertex_list().is_ok();
    let (p, q, swapped) = if positionable(k) {
        (k, l, false)
    } else if positionable(l) {
        (l, k, true)
    } else {
        return sign_sets.iter().map(|s| smooth_pair(k, l, s)).collect();
    };
    let results = polytope_pipeline(p, q, sign_sets, opts)?;
    Ok(results
        .into_iter()
        .map(|(best, telemetry, z)| Outcome { best, certified: true, swapped, inner_shift: Some(z), telemetry })
        .collect())
}

fn finish(k: &ConvexBody, l: &ConvexBody, kind: DistanceKind, o: Outcome, lower: &LowerBound) -> Result<DistanceBound> {
    let witness = Witness {
        swapped: o.swapped,
        map: o.best.map,
        inner_shift: o.inner_shift.as_ref().map(to_vec),
        outer_translation: to_vec(&o.best.d),
        r: o.best.beta,
        sign: o.best.sign,
    };
    let replay = replay_witness(k, l, &witness)?;
    if replay.iter().any(|c| !c.is_yes()) {
        return Err(Error::SolverStall(format!("witness replay failed: {replay:?}")));
    }
    let certified = o.certified && replay.iter().all(Containment::is_certified_yes);
    let (lower_value, lower_certified) = match kind {
        DistanceKind::BanachMazur => (lower.value, lower.certified),
        // d_G = d when one body is symmetric; otherwise only the trivial bound.
        DistanceKind::Grunbaum if lower.symmetric_pair => (lower.value, true),
        DistanceKind::Grunbaum => (1.0, true),
    };
    Ok(DistanceBound {
        kind,
        dim: k.dim(),
        k_hash: k.content_hash(),
        l_hash: l.content_hash(),
        upper: witness.r,
        lower: lower_value,
        upper_status: Status::from_flag(certified),
        lower_status: Status::from_flag(lower_certified),
        witness: Some(witness),
        telemetry: o.telemetry,
    })
}

/// Grünbaum and Banach–Mazur bounds from one positioning. The Grünbaum
/// bound is the better of its own refinement and the Banach–Mazur witness.
pub fn distance_bounds(k: &ConvexBody, l: &ConvexBody, opts: &DistanceOptions) -> Result<(DistanceBound, DistanceBound)> {
    let lower = distance_lower_via_asymmetry(k, l)?;
    let mut outs = upper_outcomes(k, l, &[&Sign::both(), &[Sign::Positive]], opts)?;
    let bm = outs.pop().expect("two outcomes");
    let g = outs.pop().expect("two outcomes");
    let g = if bm.best.beta < g.best.beta { bm.clone() } else { g };
    Ok((finish(k, l, DistanceKind::Grunbaum, g, &lower)?, finish(k, l, DistanceKind::BanachMazur, bm, &lower)?))
}

pub fn grunbaum_upper(k: &ConvexBody, l: &ConvexBody, opts: &DistanceOptions) -> Result<DistanceBound> {
    Ok(distance_bounds(k, l, opts)?.0)
}

pub fn banach_mazur_upper(k: &ConvexBody, l: &ConvexBody, opts: &DistanceOptions) -> Result<DistanceBound> {
    let lower = distance_lower_via_asymmetry(k, l)?;
    let o = upper_outcomes(k, l, &[&[Sign::Positive]], opts)?.pop().expect("one outcome");
    finish(k, l, DistanceKind::BanachMazur, o, &lower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    #[test]
    fn canonical_forms_reproduce_bodies() {
        let ell = ConvexBody::ellipsoid(Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]))
            .unwrap()
            .shift(&vector(&[0.2, -0.4]));
        let (b, m) = canonical(&ell).unwrap();
        let back = b.transform(&m);
        for k in 0..12 {
            let a = k as f64 * 0.5;
            let u = vector(&[a.cos(), a.sin()]);
            assert!((back.support(&u).unwrap() - ell.support(&u).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn ellipsoids_are_at_distance_one() {
        let ell = ConvexBody::ellipsoid(Matrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 0.7])).unwrap();
        let b = banach_mazur_upper(&ell, &ConvexBody::euclidean_ball(2), &DistanceOptions::default()).unwrap();
        assert!((b.upper - 1.0).abs() < 1e-9, "{}", b.upper);
        assert_eq!(b.upper_status, Status::Heuristic);
    }

    #[test]
    fn swapped_roles_when_only_the_container_is_a_polytope() {
        let sq = ConvexBody::cube(2);
        let b = banach_mazur_upper(&ConvexBody::euclidean_ball(2), &sq, &DistanceOptions::default()).unwrap();
        let w = b.witness.as_ref().unwrap();
        assert!(w.swapped);
        assert!((b.upper - std::f64::consts::SQRT_2).abs() < 1e-6);
    }
}

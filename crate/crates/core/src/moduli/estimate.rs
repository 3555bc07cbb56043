use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bodies::ConvexBody;
use crate::error::{Error, Result};
use crate::instances::rng_for;
use crate::linalg::{unit, Vector};
use crate::optim::gaussian;

/// Work limits for [`modulus_estimate_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusBudget {
    /// Boundary angles for the feasible-pair search and the radius bounds.
    pub angles: usize,
    /// Cells per axis in the initial branch-and-bound grid (n = 2).
    pub initial_cells: usize,
    /// Cap on branch-and-bound cell evaluations.
    pub max_cells: usize,
    /// Target width of the certified bracket.
    pub gap: f64,
    /// Random interior pairs used to check the boundary reduction.
    pub interior_samples: usize,
    /// Random planar sections searched in n ≥ 3 (besides coordinate planes).
    pub planes: usize,
    pub seed: u64,
}

impl Default for ModulusBudget {
    fn default() -> Self {
        Self { angles: 4096, initial_cells: 256, max_cells: 4_000_000, gap: 1e-4, interior_samples: 2000, planes: 24, seed: 0xde17a }
    }
}

impl ModulusBudget {
    /// Search for feasible pairs only; the lower bound is left at 0.
    pub fn upper_only() -> Self {
        Self { max_cells: 0, interior_samples: 0, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
    /// The lower bound is certified (n = 2 with the branch and bound run).
    pub certified: bool,
    /// Pair `(x, y)` attaining `upper`.
    pub pair: (Vec<f64>, Vec<f64>),
    /// Lipschitz constant of the cell bounds, `(R/r)²`.
    pub lipschitz: Option<f64>,
    pub cells: usize,
    /// The bracket reached the budget's gap before the cell cap.
    pub converged: bool,
    /// Smallest objective over sampled interior pairs; a value below `lower`
    /// would contradict the boundary reduction.
    pub interior_min: Option<f64>,
}

/// Planar section of a body through the origin, spanned by an orthonormal pair.
struct Section<'a> {
    body: &'a ConvexBody,
    basis: [Vector; 2],
    /// `(⟨a, e₀⟩, ⟨a, e₁⟩, c)` per facet when the body is a polytope.
    facets: Option<Vec<[f64; 3]>>,
    failed: Cell<bool>,
}

type P2 = [f64; 2];

impl<'a> Section<'a> {
    fn new(body: &'a ConvexBody, basis: [Vector; 2]) -> Self {
        let facets = body.facets().ok().map(|f| {
            f.normals.iter().zip(&f.offsets).map(|(a, c)| [a.dot(&basis[0]), a.dot(&basis[1]), *c]).collect()
        });
        Self { body, basis, facets, failed: Cell::new(false) }
    }

    fn lift(&self, p: P2) -> Vector {
        &self.basis[0] * p[0] + &self.basis[1] * p[1]
    }

    fn gauge(&self, p: P2) -> f64 {
        match &self.facets {
            Some(f) => f.iter().map(|r| (r[0] * p[0] + r[1] * p[1]) / r[2]).fold(0.0, f64::max),
            None => self.body.gauge(&self.lift(p)).unwrap_or_else(|_| {
                self.failed.set(true);
                f64::NAN
            }),
        }
    }

    fn boundary(&self, theta: f64) -> P2 {
        let u = [theta.cos(), theta.sin()];
        let g = self.gauge(u);
        [u[0] / g, u[1] / g]
    }

    /// `1 − ‖(x+y)/2‖`.
    fn objective(&self, x: P2, y: P2) -> f64 {
        1.0 - self.gauge([0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])])
    }

    /// `‖x − y‖`.
    fn separation(&self, x: P2, y: P2) -> f64 {
        self.gauge([x[0] - y[0], x[1] - y[1]])
    }
}

struct Pair {
    value: f64,
    x: P2,
    y: P2,
}

impl Pair {
    fn none() -> Self {
        Self { value: f64::INFINITY, x: [0.0; 2], y: [0.0; 2] }
    }

    fn offer(&mut self, value: f64, x: P2, y: P2) {
        if value < self.value {
            *self = Self { value, x, y };
        }
    }
}

/// First `φ` (searched from `hint`) where `‖b(θ) − b(θ + dir·φ)‖ ≥ t`, and
/// the objective there. The returned point is on the feasible side.
fn crossing(sec: &Section, theta: f64, x: P2, dir: f64, t: f64, hint: f64, step: f64) -> Option<(f64, f64, P2)> {
    let sep = |phi: f64| sec.separation(x, sec.boundary(theta + dir * phi));
    let mut hi = hint.clamp(step, TAU - step);
    let mut lo;
    if sep(hi) >= t {
        lo = hi - step;
        while lo > 0.0 && sep(lo) >= t {
            hi = lo;
            lo -= step;
        }
        lo = lo.max(0.0);
    } else {
        lo = hi;
        hi += step;
        while sep(hi) < t {
            lo = hi;
            hi += step;
            if hi >= TAU {
                return None;
            }
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if sep(mid) >= t {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 {
            break;
        }
    }
    let y = sec.boundary(theta + dir * hi);
    Some((hi, sec.objective(x, y), y))
}

/// Best feasible boundary pair in a section: one crossing per base angle
/// and orientation, then a golden-section polish around the best angle.
fn feasible_search(sec: &Section, t: f64, angles: usize, best: &mut Pair) {
    let step = TAU / angles as f64;
    let mut hints = [step; 2];
    let mut top: Option<(f64, f64, f64, f64)> = None; // (value, θ, dir, φ)
    for i in 0..angles {
        let theta = i as f64 * step;
        let x = sec.boundary(theta);
        for (k, dir) in [1.0, -1.0].into_iter().enumerate() {
            if let Some((phi, v, y)) = crossing(sec, theta, x, dir, t, hints[k], step) {
                hints[k] = phi;
                best.offer(v, x, y);
                if top.map_or(true, |b| v < b.0) {
                    top = Some((v, theta, dir, phi));
                }
            }
        }
    }
    let Some((_, theta0, dir, phi0)) = top else { return };
    let mut eval = |theta: f64| -> f64 {
        let x = sec.boundary(theta);
        match crossing(sec, theta, x, dir, t, phi0, step) {
            Some((_, v, y)) => {
                best.offer(v, x, y);
                v
            }
            None => f64::INFINITY,
        }
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (theta0 - step, theta0 + step);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d);
        }
    }
}

/// Heap entry; ordered so that `BinaryHeap` pops the smallest bound first.
struct Node {
    low: f64,
    a: f64,
    b: f64,
    h: f64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.low.total_cmp(&other.low) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other.low.total_cmp(&self.low)
    }
}

/// Lower bound on `min F` over boundary pairs with `G ≥ t` in 2D.
///
/// With `rB₂ ⊂ L ⊂ RB₂` the boundary map `θ ↦ b(θ)` is `R²/r`-Lipschitz and
/// the gauge is `1/r`-Lipschitz, so over a cell of half-width `h` the
/// objective moves by at most `(R/r)²h` and the separation by `2(R/r)²h`.
fn branch_and_bound(sec: &Section, t: f64, lip: f64, budget: &ModulusBudget, best: &mut Pair) -> (f64, usize, bool) {
    let m = budget.initial_cells.max(4);
    let h0 = PI / m as f64;
    let mut heap = BinaryHeap::new();
    let mut settled = f64::INFINITY;
    let mut cells = 0usize;
    let eval = |a: f64, b: f64, h: f64, best: &mut Pair| -> Option<f64> {
        let x = sec.boundary(a);
        let y = sec.boundary(b);
        let g = sec.separation(x, y);
        let f = sec.objective(x, y);
        if g + 2.0 * lip * h < t {
            return None;
        }
        if g >= t {
            best.offer(f, x, y);
        }
        Some((f - lip * h).max(0.0))
    };
    for i in 0..m {
        for j in 0..m {
            let (a, b) = ((2 * i + 1) as f64 * h0, (2 * j + 1) as f64 * h0);
            cells += 1;
            if let Some(low) = eval(a, b, h0, best) {
                heap.push(Node { low, a, b, h: h0 });
            }
        }
    }
    let mut exhausted = false;
    while let Some(node) = heap.peek() {
        if node.low >= best.value - budget.gap {
            break;
        }
        if cells + 4 > budget.max_cells.max(m * m) {
            exhausted = true;
            break;
        }
        let node = heap.pop().expect("peeked");
        let h = 0.5 * node.h;
        for (da, db) in [(-h, -h), (-h, h), (h, -h), (h, h)] {
            cells += 1;
            if let Some(low) = eval(node.a + da, node.b + db, h, best) {
                if low >= best.value - budget.gap {
                    settled = settled.min(low);
                } else {
                    heap.push(Node { low, a: node.a + da, b: node.b + db, h });
                }
            }
        }
    }
    let open = heap.peek().map_or(f64::INFINITY, |n| n.low);
    (settled.min(open), cells, exhausted)
}

/// Certified radii `r ≤ inradius` and `R ≥ circumradius` about the origin
/// from the boundary points `b(2πi/N)`.
fn radius_bounds(body: &ConvexBody, sec: &Section, angles: usize) -> Result<(f64, f64)> {
    let pts: Vec<P2> = (0..angles).map(|i| sec.boundary(TAU * i as f64 / angles as f64)).collect();
    let mut r = f64::INFINITY;
    for i in 0..angles {
        let (p, q) = (pts[i], pts[(i + 1) % angles]);
        // The sector between consecutive rays contains the triangle (0, p, q).
        let d = [q[0] - p[0], q[1] - p[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let s = if len2 > 0.0 { (-(p[0] * d[0] + p[1] * d[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
        r = r.min((p[0] + s * d[0]).hypot(p[1] + s * d[1]));
    }
    let big_r = match body.vertex_list() {
        Ok(vs) => vs.iter().map(|v| v.norm()).fold(0.0, f64::max),
        Err(_) => {
            // h(u) ≤ h(uᵢ) + R|u − uᵢ| and |u − uᵢ| ≤ π/N.
            let mut h = 0.0f64;
            for i in 0..angles {
                let a = TAU * i as f64 / angles as f64;
                h = h.max(body.support(&sec.lift([a.cos(), a.sin()]))?);
            }
            h / (1.0 - PI / angles as f64)
        }
    };
    Ok((r * (1.0 - 1e-12), big_r * (1.0 + 1e-12)))
}

fn interior_check(sec: &Section, t: f64, samples: usize, seed: u64) -> Option<f64> {
    if samples == 0 {
        return None;
    }
    let mut rng = rng_for(seed, 1);
    let mut min = f64::INFINITY;
    for _ in 0..samples {
        let x = sec.boundary(rng.gen::<f64>() * TAU);
        let y = sec.boundary(rng.gen::<f64>() * TAU);
        let (s, u) = (rng.gen::<f64>().sqrt(), rng.gen::<f64>().sqrt());
        let (x, y) = ([s * x[0], s * x[1]], [u * y[0], u * y[1]]);
        if sec.separation(x, y) >= t {
            min = min.min(sec.objective(x, y));
        }
    }
    Some(min)
}

fn random_plane(n: usize, rng: &mut impl Rng) -> [Vector; 2] {
    let a = Vector::from_fn(n, |_, _| gaussian(rng));
    let a = &a / a.norm();
    let b = Vector::from_fn(n, |_, _| gaussian(rng));
    let b = &b - &a * a.dot(&b);
    let b = &b / b.norm();
    [a, b]
}

/// Bracket for `δ_L(t)` with the default budget.
pub fn modulus_estimate(body: &ConvexBody, t: f64) -> Result<ModulusEstimate> {
    modulus_estimate_with(body, t, &ModulusBudget::default())
}

/// Bracket for `δ_L(t)`.
///
/// The upper bound is the best feasible pair found. In the plane the lower
/// bound is certified over boundary pairs by branch and bound; in higher
/// dimensions it repeats the upper bound from planar sections and is not
/// certified.
pub fn modulus_estimate_with(body: &ConvexBody, t: f64, budget: &ModulusBudget) -> Result<ModulusEstimate> {
    super::check_t(t)?;
    if !body.origin_is_interior() {
        return Err(Error::OriginNotInterior);
    }
    let n = body.dim();
    let mut best = Pair::none();
    if t == 0.0 {
        let x = body.support_point(&unit(n, 0))?;
        let x: Vec<f64> = x.iter().copied().collect();
        return Ok(ModulusEstimate {
            t,
            lower: 0.0,
            upper: 0.0,
            certified: true,
            pair: (x.clone(), x),
            lipschitz: None,
            cells: 0,
            converged: true,
            interior_min: None,
        });
    }
    let finish = |sec: &Section, best: &Pair| -> Result<(Vec<f64>, Vec<f64>)> {
        if sec.failed.get() || !best.value.is_finite() {
            return Err(Error::SolverStall("modulus search found no feasible pair".into()));
        }
        let lift = |p: P2| sec.lift(p).iter().copied().collect::<Vec<f64>>();
        Ok((lift(best.x), lift(best.y)))
    };
    if n == 2 {
        let sec = Section::new(body, [unit(2, 0), unit(2, 1)]);
        feasible_search(&sec, t, budget.angles, &mut best);
        let (r, big_r) = radius_bounds(body, &sec, budget.angles)?;
        let lip = (big_r / r).powi(2);
        let (lower, cells, converged) = if budget.max_cells > 0 {
            let (low, cells, exhausted) = branch_and_bound(&sec, t, lip, budget, &mut best);
            // Tiny slack for rounding in the gauge evaluations.
            (low.min(best.value) - 1e-12, cells, !exhausted)
        } else {
            (0.0, 0, false)
        };
        let interior_min = interior_check(&sec, t, budget.interior_samples, budget.seed);
        let pair = finish(&sec, &best)?;
        let upper = best.value.clamp(0.0, 1.0);
        return Ok(ModulusEstimate {
            t,
            lower: lower.clamp(0.0, upper),
            upper,
            certified: budget.max_cells > 0,
            pair,
            lipschitz: Some(lip),
            cells,
            converged,
            interior_min,
        });
    }
    let mut planes = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            planes.push([unit(n, i), unit(n, j)]);
        }
    }
    let mut rng = rng_for(budget.seed, 0);
    for _ in 0..budget.planes {
        planes.push(random_plane(n, &mut rng));
    }
    let angles = (budget.angles / 8).max(64);
    let mut found = None;
    for basis in planes {
        let sec = Section::new(body, basis);
        let mut local = Pair::none();
        feasible_search(&sec, t, angles, &mut local);
        let pair = finish(&sec, &local)?;
        if found.as_ref().map_or(true, |(v, _)| local.value < *v) {
            found = Some((local.value, pair));
        }
    }
    let (value, pair) = found.expect("at least one plane");
    let upper = value.clamp(0.0, 1.0);
    Ok(ModulusEstimate { t, lower: upper, upper, certified: false, pair, lipschitz: None, cells: 0, converged: false, interior_min: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    #[test]
    fn crossing_lands_on_the_feasible_side() {
        let disk = ConvexBody::euclidean_ball(2);
        let sec = Section::new(&disk, [unit(2, 0), unit(2, 1)]);
        let x = sec.boundary(0.3);
        let (phi, v, y) = crossing(&sec, 0.3, x, 1.0, 1.0, 0.01, 0.01).unwrap();
        assert!(sec.separation(x, y) >= 1.0);
        // Chord of length 1 on the unit circle subtends π/3.
        assert!((phi - PI / 3.0).abs() < 1e-12);
        assert!((v - (1.0 - 3f64.sqrt() / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn radius_bounds_bracket_the_square() {
        let sq = ConvexBody::cube(2);
        let sec = Section::new(&sq, [unit(2, 0), unit(2, 1)]);
        let (r, big_r) = radius_bounds(&sq, &sec, 4096).unwrap();
        assert!(r <= 1.0 && r > 1.0 - 1e-3);
        assert!(big_r >= 2f64.sqrt() && big_r < 2f64.sqrt() + 1e-9);
        let e = ConvexBody::ellipsoid(crate::linalg::Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0])).unwrap();
        let sec = Section::new(&e, [unit(2, 0), unit(2, 1)]);
        let (r, big_r) = radius_bounds(&e, &sec, 4096).unwrap();
        assert!(r <= 0.5 && r > 0.499);
        assert!(big_r >= 1.0 && big_r < 1.001);
    }

    #[test]
    fn heap_pops_smallest_bound() {
        let mut heap = BinaryHeap::new();
        for low in [0.3, 0.1, 0.2] {
            heap.push(Node { low, a: 0.0, b: 0.0, h: 1.0 });
        }
        assert_eq!(heap.pop().unwrap().low, 0.1);
    }

    #[test]
    fn off_centre_origin_is_rejected() {
        let sq = ConvexBody::cube(2).shift(&vector(&[1.0, 0.0]));
        assert_eq!(modulus_estimate(&sq, 0.5), Err(Error::OriginNotInterior));
    }
}

//! Maximal-volume affine image of a polytope inside a convex body.
//!
//! Variables are θ = (A row-major, b). Minimizes
//! `t·(−log det A) − Σ log slack` for an increasing barrier weight `t`,
//! on the branch `det A > 0`.

use serde::Serialize;

use crate::bodies::{AffineMap, ConvexBody, Facets, Shape};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::contacts::CONTACT_TOL;
use crate::linalg::{centroid, Matrix, Vector};
use crate::optim::gaussian;

#[derive(Debug, Clone, Serialize)]
pub struct SolverOptions {
    /// Barrier weight of the first outer step.
    pub t0: f64,
    /// Growth factor of the barrier weight per outer step.
    pub growth: f64,
    pub outer_steps: usize,
    pub max_newton: usize,
    /// Stop an inner solve once λ²/2 falls below this.
    pub decrement_tol: f64,
    /// Rotated starting positions per orientation.
    pub restarts: usize,
    pub seed: u64,
    /// Boundary slack for contact detection.
    pub contact_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            t0: 1e3,
            growth: 10.0,
            outer_steps: 8,
            max_newton: 500,
            decrement_tol: 1e-9,
            restarts: 16,
            seed: 0,
            contact_tol: CONTACT_TOL,
        }
    }
}

/// Output of [`max_volume_position`].
#[derive(Debug, Clone, Serialize)]
pub struct Positioning {
    #[serde(skip)]
    pub map: AffineMap,
    pub log_det: f64,
    /// Starting points tried (rotations × orientations).
    pub starts: usize,
    pub outer_steps: usize,
    /// Newton steps of the winning start.
    pub newton_iterations: usize,
    pub total_newton_iterations: usize,
    /// Barrier subproblem value at the end of each outer step.
    pub barrier_values: Vec<f64>,
    /// Newton decrement λ² of the final inner solve.
    pub final_decrement: f64,
    /// `λ²/(2t)`: predicted suboptimality of `−log det A − (1/t) Σ log slack`
    /// at the returned point.
    pub stationarity: f64,
    /// Largest `gauge_L` over the positioned vertices, minus 1.
    pub max_violation: f64,
    /// End points of the other starts, distinct from `map` and each other,
    /// by decreasing volume.
    #[serde(skip)]
    pub alternatives: Vec<AffineMap>,
}

/// Entrywise distance under which two end points count as the same.
const ALTERNATIVE_TOL: f64 = 1e-6;

/// The containing body expressed through smooth or linear constraints in a
/// working frame; `frame` maps working coordinates to the world.
#[derive(Debug, Clone)]
pub(crate) enum Container {
    Facets(Facets),
    Ellipsoid(Matrix),
    Lp(f64),
}

#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub n: usize,
    pub points: Vec<Vector>,
    pub container: Container,
    pub frame: AffineMap,
    /// Points were reflected in the first coordinate.
    pub mirrored: bool,
}

impl Problem {
    pub fn new(k: &ConvexBody, l: &ConvexBody) -> Result<Self> {
        let n = k.dim();
        if l.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: l.dim() });
        }
        let points = k.vertex_list()?;
        let (container, frame) = match l.shape() {
            Shape::VPolytope(_) | Shape::HPolytope(_) => (Container::Facets(l.facets()?), AffineMap::identity(n)),
            Shape::Ellipsoid { shape, .. } => (Container::Ellipsoid(shape.clone()), l.pose().clone()),
            Shape::LpBall { p } => (Container::Lp(*p), l.pose().clone()),
            Shape::Polar(_) => {
                return Err(Error::Unsupported("max-volume positioning inside a polar-kind body".into()))
            }
        };
        Ok(Problem { n, points, container, frame, mirrored: false })
    }

    /// The same problem for the reflected body `D K`, `D = diag(−1, 1, …)`.
    pub fn mirrored(&self) -> Self {
        let mut p = self.clone();
        p.mirrored = !p.mirrored;
        for w in &mut p.points {
            w[0] = -w[0];
        }
        p
    }

    pub fn dim_theta(&self) -> usize {
        self.n * self.n + self.n
    }

    fn split(&self, theta: &Vector) -> (Matrix, Vector) {
        let n = self.n;
        let a = Matrix::from_fn(n, n, |i, j| theta[i * n + j]);
        let b = Vector::from_fn(n, |i, _| theta[n * n + i]);
        (a, b)
    }

    /// Gauge of the container in the working frame about `p`.
    fn gauge_about(&self, p: &Vector, x: &Vector) -> f64 {
        match &self.container {
            Container::Facets(f) => f
                .normals
                .iter()
                .zip(&f.offsets)
                .map(|(a, c)| a.dot(x) / (c - a.dot(p)))
                .fold(0.0, f64::max),
            Container::Ellipsoid(q) => x.dot(&(q * x)).sqrt(),
            Container::Lp(p) => x.iter().map(|v| v.abs().powf(*p)).sum::<f64>().powf(1.0 / p),
        }
    }

    /// Facet excess for polytopes, gauge excess for smooth containers.
    fn violation(&self, x: &Vector) -> f64 {
        match &self.container {
            Container::Facets(f) => f.max_violation(x),
            _ => self.gauge_about(&Vector::zeros(self.n), x) - 1.0,
        }
    }

    fn interior(&self) -> Vector {
        match &self.container {
            Container::Facets(f) => {
                let verts = crate::bodies::hull::enumerate_vertices(&f.normals, &f.offsets);
                centroid(&verts)
            }
            _ => Vector::zeros(self.n),
        }
    }

    /// Strictly feasible start: K centred at its vertex centroid, rotated,
    /// and scaled to half the container's gauge about an interior point.
    pub fn initial_theta(&self, rotation: &Matrix) -> Result<Vector> {
        let n = self.n;
        let c = centroid(&self.points);
        let p = self.interior();
        let worst = self.points.iter().map(|w| self.gauge_about(&p, &(rotation * (w - &c)))).fold(0.0, f64::max);
        if !(worst.is_finite() && worst > 0.0) {
            return Err(Error::InfeasibleStart);
        }
        let s = 0.5 / worst;
        let a = rotation * s;
        let b = p - &a * c;
        let mut theta = Vector::zeros(self.dim_theta());
        for i in 0..n {
            for j in 0..n {
                theta[i * n + j] = a[(i, j)];
            }
            theta[n * n + i] = b[i];
        }
        Ok(theta)
    }

    /// Barrier-only value, gradient and Hessian with respect to a working
    /// point `x`; `None` outside the open feasible set.
    fn point_terms(&self, x: &Vector) -> Option<(f64, Vector, Matrix)> {
        let n = self.n;
        match &self.container {
            Container::Facets(f) => {
                let mut val = 0.0;
                let mut g = Vector::zeros(n);
                let mut h = Matrix::zeros(n, n);
                for (a, c) in f.normals.iter().zip(&f.offsets) {
                    let s = c - a.dot(x);
                    if s <= 0.0 {
                        return None;
                    }
                    val -= s.ln();
                    g += a / s;
                    h += a * a.transpose() / (s * s);
                }
                Some((val, g, h))
            }
            Container::Ellipsoid(q) => {
                let qx = q * x;
                let s = 1.0 - x.dot(&qx);
                if s <= 0.0 {
                    return None;
                }
                let dpsi = qx * 2.0;
                let h = q * (2.0 / s) + &dpsi * dpsi.transpose() / (s * s);
                Some((-s.ln(), dpsi / s, h))
            }
            Container::Lp(p) => {
                let psi: f64 = x.iter().map(|v| v.abs().powf(*p)).sum();
                let s = 1.0 - psi;
                if s <= 0.0 {
                    return None;
                }
                let dpsi = Vector::from_fn(n, |i, _| p * x[i].abs().powf(p - 1.0) * x[i].signum());
                let mut h = &dpsi * dpsi.transpose() / (s * s);
                for i in 0..n {
                    h[(i, i)] += p * (p - 1.0) * x[i].abs().max(1e-12).powf(p - 2.0) / s;
                }
                Some((-s.ln(), dpsi / s, h))
            }
        }
    }

    /// Value, gradient and Hessian of `t·(−log det A) + barrier`.
    pub fn evaluate(&self, theta: &Vector, t: f64) -> Option<Evaluation> {
        let n = self.n;
        let dim = self.dim_theta();
        let (a, b) = self.split(theta);
        let det = a.determinant();
        if !(det > 0.0) {
            return None;
        }
        let ainv = a.clone().try_inverse()?;
        let mut value = -t * det.ln();
        let mut grad = Vector::zeros(dim);
        let mut hess = Matrix::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                grad[i * n + j] = -t * ainv[(j, i)];
                for k in 0..n {
                    for l in 0..n {
                        hess[(i * n + j, k * n + l)] = t * ainv[(j, k)] * ainv[(l, i)];
                    }
                }
            }
        }
        let mut barrier = 0.0;
        let mut bgrad = Vector::zeros(dim);
        let mut bhess = Matrix::zeros(dim, dim);
        for w in &self.points {
            let x = &a * w + &b;
            let (v, gx, hx) = self.point_terms(&x)?;
            barrier += v;
            // ∂x/∂θ: row i has w in the block of A's row i and 1 at b_i.
            let mut jac = Matrix::zeros(n, dim);
            for i in 0..n {
                for k in 0..n {
                    jac[(i, i * n + k)] = w[k];
                }
                jac[(i, n * n + i)] = 1.0;
            }
            bgrad += jac.transpose() * gx;
            bhess += jac.transpose() * hx * &jac;
        }
        value += barrier;
        grad += &bgrad;
        hess += &bhess;
        Some(Evaluation { value, grad, hess })
    }

    /// The map on the original (unreflected) body.
    pub fn world_map(&self, theta: &Vector) -> Result<AffineMap> {
        let (mut a, b) = self.split(theta);
        if self.mirrored {
            a.column_mut(0).neg_mut();
        }
        let lin = self.frame.linear() * a;
        let tr = self.frame.linear() * b + self.frame.translation_part();
        AffineMap::new(lin, tr)
    }
}

pub(crate) struct Evaluation {
    pub value: f64,
    pub grad: Vector,
    pub hess: Matrix,
}

/// Newton direction; where the Hessian is indefinite its eigenvalues are
/// replaced by their absolute values (floored), which keeps a descent
/// direction and full curvature information.
fn newton_direction(ev: &Evaluation) -> Vector {
    let h = &ev.hess;
    if let Some(ch) = h.clone().cholesky() {
        let d = ch.solve(&(-&ev.grad));
        if d.dot(&ev.grad) < 0.0 {
            return d;
        }
    }
    let eig = h.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs())).max(1e-300);
    let floor = 1e-10 * top;
    let coords = eig.eigenvectors.transpose() * &ev.grad;
    let scaled = Vector::from_fn(coords.len(), |i, _| -coords[i] / eig.eigenvalues[i].abs().max(floor));
    &eig.eigenvectors * scaled
}

/// Random rotation (det +1) from the QR factor of a Gaussian matrix.
fn random_rotation<R: rand::Rng>(n: usize, rng: &mut R) -> Matrix {
    let g = Matrix::from_fn(n, n, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

struct Run {
    theta: Vector,
    newton_iterations: usize,
    barrier_values: Vec<f64>,
    final_decrement: f64,
    t_last: f64,
}

fn solve_from(prob: &Problem, mut theta: Vector, opts: &SolverOptions) -> Result<Run> {
    let mut t = opts.t0;
    let mut newton_iterations = 0;
    let mut barrier_values = Vec::with_capacity(opts.outer_steps);
    let mut final_decrement = f64::NAN;
    for _ in 0..opts.outer_steps {
        let mut ev = prob.evaluate(&theta, t).ok_or(Error::InfeasibleStart)?;
        let mut converged = false;
        for _ in 0..opts.max_newton {
            newton_iterations += 1;
            let d = newton_direction(&ev);
            let slope = d.dot(&ev.grad);
            final_decrement = -slope;
            // t·log det carries absolute rounding ~t·ε; below that the
            // line search only sees noise.
            let noise = 1e-12 * (ev.value.abs() + t);
            if -slope / 2.0 <= opts.decrement_tol.max(noise) {
                converged = true;
                break;
            }
            let mut alpha = 1.0;
            let mut accepted = None;
            while alpha > 1e-14 {
                let trial = &theta + &d * alpha;
                if let Some(e) = prob.evaluate(&trial, t) {
                    if e.value <= ev.value + 0.25 * alpha * slope {
                        accepted = Some((trial, e));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((th, e)) => {
                    theta = th;
                    ev = e;
                }
                None => {
                    converged = -slope <= 1e3 * noise;
                    break;
                }
            }
        }
        if !converged {
            return Err(Error::SolverStall(format!(
                "Newton decrement {final_decrement:.3e} at barrier weight {t:.1e}"
            )));
        }
        barrier_values.push(ev.value);
        t *= opts.growth;
    }
    Ok(Run { theta, newton_iterations, barrier_values, final_decrement, t_last: t / opts.growth })
}

pub fn max_volume_position(k: &ConvexBody, l: &ConvexBody) -> Result<Positioning> {
    max_volume_position_with(k, l, &SolverOptions::default())
}

/// Runs the barrier method from `restarts` rotated starts for both `K` and
/// its mirror image and keeps the largest volume.
pub fn max_volume_position_with(k: &ConvexBody, l: &ConvexBody, opts: &SolverOptions) -> Result<Positioning> {
    let base = Problem::new(k, l)?;
    let n = base.n;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let rotations: Vec<Matrix> = (0..opts.restarts.max(1))
        .map(|r| if r == 0 { Matrix::identity(n, n) } else { random_rotation(n, &mut rng) })
        .collect();
    let mut runs: Vec<(AffineMap, Run)> = Vec::new();
    let mut last_err = None;
    let mut total_iterations = 0;
    for mirrored in [false, true] {
        let prob = if mirrored { base.mirrored() } else { base.clone() };
        for rot in &rotations {
            let run = prob.initial_theta(rot).and_then(|th| solve_from(&prob, th, opts));
            match run {
                Ok(run) => {
                    total_iterations += run.newton_iterations;
                    runs.push((prob.world_map(&run.theta)?, run));
                }
                Err(e) => last_err = Some(e),
            }
        }
    }
    // Stable sort: ties keep start order.
    runs.sort_by(|a, b| b.0.det().abs().partial_cmp(&a.0.det().abs()).unwrap_or(std::cmp::Ordering::Equal));
    let mut runs = runs.into_iter();
    let Some((map, run)) = runs.next() else {
        return Err(last_err.unwrap_or(Error::InfeasibleStart));
    };
    let mut alternatives: Vec<AffineMap> = Vec::new();
    for (m, _) in runs {
        if m.max_abs_diff(&map) > ALTERNATIVE_TOL && alternatives.iter().all(|a| a.max_abs_diff(&m) > ALTERNATIVE_TOL) {
            alternatives.push(m);
        }
    }
    let frame_inv = base.frame.inverse();
    let max_violation = base
        .points
        .iter()
        .map(|w| base.violation(&frame_inv.apply(&map.apply(w))))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Positioning {
        log_det: map.det().abs().ln(),
        map,
        starts: 2 * rotations.len(),
        outer_steps: opts.outer_steps,
        newton_iterations: run.newton_iterations,
        total_newton_iterations: total_iterations,
        barrier_values: run.barrier_values,
        final_decrement: run.final_decrement,
        stationarity: run.final_decrement / (2.0 * run.t_last),
        max_violation,
        alternatives,
    })
}

/// Worst relative error `‖g_fd − g‖₂ / ‖g‖₂` between the barrier gradient
/// and central differences over `points` seeded feasible parameters near the
/// starting position of `K` in `L`.
pub fn barrier_gradient_check(k: &ConvexBody, l: &ConvexBody, points: usize, seed: u64) -> Result<f64> {
    let prob = Problem::new(k, l)?;
    let base = prob.initial_theta(&Matrix::identity(prob.n, prob.n))?;
    let mut rng = crate::instances::rng_for(seed, 0);
    let t = 7.0;
    let mut worst = 0.0f64;
    let (mut checked, mut tries) = (0, 0);
    while checked < points {
        tries += 1;
        if tries > 100 * points.max(1) {
            return Err(Error::InfeasibleStart);
        }
        let theta = Vector::from_fn(base.len(), |i, _| base[i] * (1.0 + 0.3 * (rng.gen::<f64>() - 0.5)));
        let Some(ev) = prob.evaluate(&theta, t) else { continue };
        let mut fd = Vector::zeros(theta.len());
        let mut ok = true;
        for i in 0..theta.len() {
            let h = 1e-6 * (1.0 + theta[i].abs());
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[i] += h;
            tm[i] -= h;
            match (prob.evaluate(&tp, t), prob.evaluate(&tm, t)) {
                (Some(a), Some(b)) => fd[i] = (a.value - b.value) / (2.0 * h),
                _ => ok = false,
            }
        }
        if !ok {
            continue;
        }
        worst = worst.max((&fd - &ev.grad).norm() / ev.grad.norm().max(f64::MIN_POSITIVE));
        checked += 1;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quad() -> ConvexBody {
        ConvexBody::vpolytope(vec![
            vector(&[1.2, -0.3]),
            vector(&[0.4, 1.1]),
            vector(&[-0.9, 0.6]),
            vector(&[-0.5, -1.0]),
        ])
        .unwrap()
    }

    fn triangle() -> ConvexBody {
        ConvexBody::vpolytope(vec![vector(&[0.3, 0.1]), vector(&[2.0, 0.4]), vector(&[0.7, 1.5])]).unwrap()
    }

    fn check_gradient(prob: &Problem, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = prob.initial_theta(&Matrix::identity(prob.n, prob.n)).unwrap();
        let t = 7.0;
        let mut checked = 0;
        while checked < 10 {
            let theta = Vector::from_fn(base.len(), |i, _| base[i] * (1.0 + 0.3 * (rng.gen::<f64>() - 0.5)));
            let Some(ev) = prob.evaluate(&theta, t) else { continue };
            for i in 0..theta.len() {
                let h = 1e-6 * (1.0 + theta[i].abs());
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[i] += h;
                tm[i] -= h;
                let fd = (prob.evaluate(&tp, t).unwrap().value - prob.evaluate(&tm, t).unwrap().value) / (2.0 * h);
                let g = ev.grad[i];
                assert!((fd - g).abs() <= 1e-4 * g.abs().max(1.0), "component {i}: fd {fd} vs {g}");
                // Hessian column against differences of gradients.
                let gd = (prob.evaluate(&tp, t).unwrap().grad - prob.evaluate(&tm, t).unwrap().grad) / (2.0 * h);
                for r in 0..theta.len() {
                    let hv = ev.hess[(r, i)];
                    assert!((gd[r] - hv).abs() <= 1e-4 * hv.abs().max(1.0), "H[{r},{i}]: {} vs {hv}", gd[r]);
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn barrier_gradient_matches_finite_differences() {
        check_gradient(&Problem::new(&triangle(), &quad()).unwrap(), 1);
        let ell = ConvexBody::ellipsoid(Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]))
            .unwrap()
            .shift(&vector(&[-0.2, 0.1]));
        check_gradient(&Problem::new(&triangle(), &ell).unwrap(), 2);
        let lp = ConvexBody::lp_ball(3, 3.0).unwrap();
        check_gradient(&Problem::new(&ConvexBody::regular_simplex(3), &lp).unwrap(), 3);
    }

    #[test]
    fn start_is_strictly_feasible() {
        let prob = Problem::new(&triangle(), &quad()).unwrap();
        assert!(prob.evaluate(&prob.initial_theta(&Matrix::identity(2, 2)).unwrap(), 1.0).is_some());
    }

    #[test]
    fn body_in_itself_is_identity() {
        let q = quad();
        let pos = max_volume_position(&q, &q).unwrap();
        assert!(pos.map.max_abs_diff(&AffineMap::identity(2)) < 1e-6, "{:?}", pos.map);
    }

    #[test]
    fn polar_container_is_rejected() {
        let l = ConvexBody::euclidean_ball(2).shift(&vector(&[0.1, 0.0])).polar().unwrap();
        assert!(matches!(max_volume_position(&triangle(), &l), Err(Error::Unsupported(_))));
    }
}

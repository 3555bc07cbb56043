//! Derivative-free helpers: Nelder–Mead and deterministic direction sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Vector;

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vector,
    pub value: f64,
    pub iterations: usize,
}

/// Minimizes `f` from `x0` with initial simplex edge `step`.
pub fn nelder_mead<F>(mut f: F, x0: &Vector, step: f64, max_iter: usize, ftol: f64) -> NelderMeadResult
where
    F: FnMut(&Vector) -> f64,
{
    let n = x0.len();
    let mut pts: Vec<Vector> = Vec::with_capacity(n + 1);
    pts.push(x0.clone());
    for i in 0..n {
        let mut p = x0.clone();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(&mut f).collect();
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if (vals[n] - vals[0]).abs() <= ftol * (1.0 + vals[0].abs()) {
            let spread = pts.iter().map(|p| (p - &pts[0]).amax()).fold(0.0, f64::max);
            if spread < 1e-12 || (vals[n] - vals[0]).abs() == 0.0 {
                break;
            }
        }
        let mut c = Vector::zeros(n);
        for p in &pts[..n] {
            c += p;
        }
        c /= n as f64;
        let xr = &c + (&c - &pts[n]);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = &c + (&xr - &c) * 2.0;
            let fe = f(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = &c + (&xr - &c) * 0.5;
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = &c + (&pts[n] - &c) * 0.5;
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    pts[i] = &pts[0] + (&pts[i] - &pts[0]) * 0.5;
                    vals[i] = f(&pts[i]);
                }
            }
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    NelderMeadResult { x: pts[best].clone(), value: vals[best], iterations: it }
}

/// Unit directions: an angular grid in the plane, seeded Gaussian samples
/// plus the coordinate axes otherwise.
pub fn sphere_directions(n: usize, count: usize, seed: u64) -> Vec<Vector> {
    if n == 2 {
        return (0..count)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / count as f64;
                Vector::from_column_slice(&[a.cos(), a.sin()])
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count + 2 * n);
    for k in 0..n {
        for s in [1.0, -1.0] {
            out.push(crate::linalg::unit(n, k) * s);
        }
    }
    while out.len() < count + 2 * n {
        let v = Vector::from_fn(n, |_, _| gaussian(&mut rng));
        let norm = v.norm();
        if norm > 1e-9 {
            out.push(v / norm);
        }
    }
    out
}

pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box–Muller; one draw per call keeps streams simple to reason about.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Maximizes a function of a unit direction: grid/sample start, then local
/// Nelder–Mead on the unnormalized direction from the best few seeds.
pub fn maximize_over_sphere<F>(n: usize, samples: usize, restarts: usize, seed: u64, mut f: F) -> (Vector, f64)
where
    F: FnMut(&Vector) -> f64,
{
    let dirs = sphere_directions(n, samples, seed);
    let mut scored: Vec<(f64, usize)> = dirs.iter().enumerate().map(|(i, d)| (f(d), i)).collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut best_dir = dirs[scored[0].1].clone();
    let mut best = scored[0].0;
    let step = if n == 2 { std::f64::consts::TAU / samples as f64 } else { 0.2 };
    for &(_, i) in scored.iter().take(restarts.max(1)) {
        let res = nelder_mead(
            |x| {
                let norm = x.norm();
                if norm < 1e-12 {
                    return f64::INFINITY;
                }
                -f(&(x / norm))
            },
            &dirs[i],
            step,
            200 * n,
            1e-15,
        );
        if -res.value > best {
            best = -res.value;
            best_dir = &res.x / res.x.norm();
        }
    }
    (best_dir, best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    #[test]
    fn rosenbrock_minimum() {
        let r = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &vector(&[-1.2, 1.0]),
            0.5,
            5000,
            1e-16,
        );
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn sphere_maximum_of_linear_function() {
        let c = vector(&[1.0, -2.0, 2.0]);
        let (d, v) = maximize_over_sphere(3, 200, 3, 7, |u| u.dot(&c));
        assert!((v - 3.0).abs() < 1e-8);
        assert!((d - &c / 3.0).norm() < 1e-4);
    }
}

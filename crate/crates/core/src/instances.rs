//! Seeded test instances. Each instance draws from its own ChaCha stream
//! keyed by `(seed, index)`, so batches can be generated in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bodies::ConvexBody;
use crate::linalg::{centroid, regular_simplex, Vector};
use crate::optim::gaussian;

pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Hull of `count` Gaussian points, recentred at its vertex centroid.
pub fn random_polytope<R: Rng>(rng: &mut R, n: usize, count: usize) -> ConvexBody {
    loop {
        let pts: Vec<Vector> = (0..count).map(|_| Vector::from_fn(n, |_, _| gaussian(rng))).collect();
        if let Ok(body) = ConvexBody::vpolytope(pts) {
            let c = centroid(&body.vertex_list().expect("polytope has vertices"));
            let body = body.shift(&c);
            if body.origin_inradius().map(|r| r > 1e-3).unwrap_or(false) {
                return body;
            }
        }
    }
}

/// A random pair `(K, L)` of polytopes: K with `n+1..=n+3` points, L with
/// `n+2..=n+5`, both recentred.
pub fn random_pair(n: usize, seed: u64, index: u64) -> (ConvexBody, ConvexBody) {
    let mut rng = rng_for(seed, index);
    let kc = n + 1 + rng.gen_range(0..3);
    let lc = n + 2 + rng.gen_range(0..4);
    let k = random_polytope(&mut rng, n, kc);
    let l = random_polytope(&mut rng, n, lc);
    (k, l)
}

/// Regular simplex (unit circumradius) with each coordinate moved by up to
/// `eta`.
pub fn jittered_simplex(n: usize, eta: f64, seed: u64, index: u64) -> ConvexBody {
    let mut rng = rng_for(seed, index);
    let pts: Vec<Vector> = regular_simplex(n)
        .into_iter()
        .map(|v| v + Vector::from_fn(n, |_, _| eta * rng.gen_range(-1.0..=1.0)))
        .collect();
    ConvexBody::vpolytope(pts).expect("small jitter keeps the simplex full-dimensional")
}

/// Regular simplex with the first vertex cut off at relative depth `tau`;
/// its asymmetry is about `n(1 − tau/n)`.
pub fn truncated_simplex(n: usize, tau: f64) -> ConvexBody {
    let v = regular_simplex(n);
    let mut pts = v[1..].to_vec();
    pts.extend(v[1..].iter().map(|w| &v[0] + (w - &v[0]) * tau));
    ConvexBody::vpolytope(pts).expect("a truncated simplex is full-dimensional")
}

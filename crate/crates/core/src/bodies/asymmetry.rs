use serde::Serialize;

use super::body::{ConvexBody, Shape};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::lp::{LinearProgram, Relation};
use crate::optim::{maximize_over_sphere, nelder_mead};

/// Least `s` with `L − z ⊂ −s(L − z)` and a minimizing centre `z`.
#[derive(Debug, Clone, Serialize)]
pub struct Asymmetry {
    pub value: f64,
    pub center: Vec<f64>,
    pub certified: bool,
}

/// Asymmetry constant. Exact LP for polytopes; centrally symmetric smooth
/// kinds return 1 about their centre; anything else falls back to a
/// coordinate search flagged as heuristic.
pub fn asymmetry_constant(body: &ConvexBody) -> Result<Asymmetry> {
    match body.shape() {
        Shape::VPolytope(_) | Shape::HPolytope(_) => polytope_asymmetry(body),
        Shape::LpBall { .. } | Shape::Ellipsoid { .. } => Ok(Asymmetry {
            value: 1.0,
            center: body.interior_point().iter().copied().collect(),
            certified: true,
        }),
        Shape::Polar(_) => heuristic_asymmetry(body),
    }
}

fn polytope_asymmetry(body: &ConvexBody) -> Result<Asymmetry> {
    let n = body.dim();
    let vertices = body.vertex_list()?;
    let facets = body.facets()?;
    // With λ = 1/s and w = (1 + λ) z:  maximize λ  s.t.  ⟨aᵢ, w − λ vⱼ⟩ ≤ cᵢ.
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    let mut lp = LinearProgram::maximize(obj);
    for k in 0..n {
        lp.set_free(k);
    }
    for (a, c) in facets.normals.iter().zip(&facets.offsets) {
        for v in &vertices {
            let mut row: Vec<f64> = a.iter().copied().collect();
            row.push(-a.dot(v));
            lp.add(row, Relation::Le, *c);
        }
    }
    let (x, lambda) = lp
        .solve()
        .optimal()
        .ok_or_else(|| Error::DegenerateBody("asymmetry program has no optimum".into()))?;
    if lambda <= 0.0 {
        return Err(Error::DegenerateBody("asymmetry program returned λ ≤ 0".into()));
    }
    let w = Vector::from_column_slice(&x[..n]);
    let z = w / (1.0 + lambda);
    Ok(Asymmetry { value: 1.0 / lambda, center: z.iter().copied().collect(), certified: true })
}

/// `max_u (h(u) − ⟨u,z⟩) / (h(−u) + ⟨u,z⟩)`.
fn ratio_at(body: &ConvexBody, z: &Vector) -> f64 {
    let n = body.dim();
    let samples = if n == 2 { 720 } else { 1500 };
    maximize_over_sphere(n, samples, 2, 11, |u| {
        let num = body.support(u).unwrap_or(f64::INFINITY) - u.dot(z);
        let den = body.support(&(-u)).unwrap_or(f64::INFINITY) + u.dot(z);
        if den <= 0.0 {
            f64::INFINITY
        } else {
            num / den
        }
    })
    .1
}

fn heuristic_asymmetry(body: &ConvexBody) -> Result<Asymmetry> {
    let start = body.interior_point();
    let res = nelder_mead(|z| ratio_at(body, z), &start, 0.05, 300, 1e-10);
    Ok(Asymmetry { value: res.value.max(1.0), center: res.x.iter().copied().collect(), certified: false })
}

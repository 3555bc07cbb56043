use rayon::prelude::*;
use serde::Serialize;

use super::{modulus_estimate_with, shift_bound_gauge, shift_bound_polar, ModulusBudget, ModulusCurve};
use crate::bodies::ConvexBody;
use crate::distance::{containment_factor, Sign};
use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Slack allowed between a transfer bound and the estimated modulus.
pub const SHIFT_TOL: f64 = 1e-6;

/// One grid point of the shift-lemma check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftCheck {
    pub c: f64,
    pub t: f64,
    pub z: Vec<f64>,
    /// Lower bound for `δ_{L_z}(t)` and the estimated modulus (upper end).
    pub gauge_bound: f64,
    pub gauge_modulus: f64,
    /// Lower bound for `δ_{(L_z)°}(t)` and the estimated modulus.
    pub polar_bound: f64,
    pub polar_modulus: f64,
    pub holds: bool,
}

/// Least `r ≥ 1` with `L ⊂ −rL`.
pub fn reflection_ratio(l: &ConvexBody) -> Result<f64> {
    if l.is_centrally_symmetric_kind() && l.pose().translation_part().amax() == 0.0 {
        return Ok(1.0);
    }
    Ok(containment_factor(l, l, Sign::Negative)?.value.max(1.0))
}

/// The point `z` in direction `dir` with `‖z‖_L = 1 − C`.
pub fn shift_point(l: &ConvexBody, dir: &Vector, c: f64) -> Result<Vector> {
    let g = l.gauge(dir)?;
    if g <= 0.0 {
        return Err(Error::DomainError("shift direction has zero gauge".into()));
    }
    Ok(dir * ((1.0 - c) / g))
}

/// Checks both transfer bounds at every `(C, t)`: the estimated moduli of
/// `L_z = L − z` and of its polar must not fall below the bounds computed
/// from `curve` (for `L`) and `polar_curve` (for `L°`).
pub fn validate_shift_lemmas(
    l: &ConvexBody,
    curve: &ModulusCurve,
    polar_curve: &ModulusCurve,
    dir: &Vector,
    cs: &[f64],
    ts: &[f64],
    budget: &ModulusBudget,
) -> Result<Vec<ShiftCheck>> {
    let r = reflection_ratio(l)?;
    let grid: Vec<(f64, f64)> = cs.iter().flat_map(|&c| ts.iter().map(move |&t| (c, t))).collect();
    grid.par_iter()
        .map(|&(c, t)| {
            let z = shift_point(l, dir, c)?;
            let lz = l.shift(&z);
            let polar = lz.polar()?;
            let gauge_bound = shift_bound_gauge(curve, c, r, t)?;
            let polar_bound = shift_bound_polar(polar_curve, c, r, t)?;
            let gauge_modulus = modulus_estimate_with(&lz, t, budget)?.upper;
            let polar_modulus = modulus_estimate_with(&polar, t, budget)?.upper;
            let holds = gauge_modulus >= gauge_bound - SHIFT_TOL && polar_modulus >= polar_bound - SHIFT_TOL;
            Ok(ShiftCheck {
                c,
                t,
                z: z.iter().copied().collect(),
                gauge_bound,
                gauge_modulus,
                polar_bound,
                polar_modulus,
                holds,
            })
        })
        .collect()
}

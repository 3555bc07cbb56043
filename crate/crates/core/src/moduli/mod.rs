//! Moduli of convexity `δ_L(t) = inf{1 − ‖(x+y)/2‖_L : x, y ∈ L, ‖x − y‖_L ≥ t}`
//! for `t ∈ [0, 1]`, closed forms for ℓ_p balls, and the transfer bounds
//! for shifted bodies and their polars.
//!
//! The midpoint is symmetric in `(x, y)`, so requiring `‖x − y‖_L ≥ t` or
//! `max(‖x − y‖_L, ‖y − x‖_L) ≥ t` gives the same infimum.

mod estimate;
mod validate;

pub use estimate::{modulus_estimate, modulus_estimate_with, ModulusBudget, ModulusEstimate};
pub use validate::{reflection_ratio, shift_point, validate_shift_lemmas, ShiftCheck, SHIFT_TOL};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bodies::ConvexBody;
use crate::error::{Error, Result};

/// Whether a value is the modulus itself or only a lower bound for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModulusKind {
    Exact,
    Bound,
}

pub(crate) fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::DomainError(format!("t must lie in [0, 1], got {t}")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::DomainError(format!("p must lie in (1, ∞), got {p}")));
    }
    Ok(())
}

/// Modulus of `B_p`: exact for `p ≥ 2`, the quadratic lower bound
/// `(p − 1)t²/8` for `p < 2`.
pub fn modulus_lp(p: f64, t: f64) -> Result<(f64, ModulusKind)> {
    check_p(p)?;
    check_t(t)?;
    if p >= 2.0 {
        // 1 − (1 − s)^{1/p} computed without cancellation for small s.
        let s = (t / 2.0).powf(p);
        Ok((-((-s).ln_1p() / p).exp_m1(), ModulusKind::Exact))
    } else {
        Ok(((p - 1.0) * t * t / 8.0, ModulusKind::Bound))
    }
}

/// Hanner's exact modulus of `ℓ_p` for `1 < p ≤ 2`: the root `δ` of
/// `(1 − δ + t/2)^p + (1 − δ − t/2)^p = 2`.
pub fn hanner_modulus(p: f64, t: f64) -> Result<f64> {
    check_p(p)?;
    check_t(t)?;
    if p > 2.0 {
        return Err(Error::DomainError(format!("Hanner's formula is for p ≤ 2, got {p}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let f = |d: f64| (1.0 - d + t / 2.0).powf(p) + (1.0 - d - t / 2.0).abs().powf(p) - 2.0;
    // f decreases on [0, 1 − t/2], f(0) ≥ 0 by convexity and f(1 − t/2) = t^p − 2 < 0.
    let (mut lo, mut hi) = (0.0, 1.0 - t / 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(lo)
}

/// Exact modulus of `B_p` for every `p > 1`.
pub fn lp_modulus_exact(p: f64, t: f64) -> Result<f64> {
    if p >= 2.0 {
        modulus_lp(p, t).map(|v| v.0)
    } else {
        hanner_modulus(p, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusSample {
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
    pub certified: bool,
}

/// Where a curve's values come from. Closed-form curves evaluate their law at
/// any `t`; estimated curves only know their samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CurveSource {
    /// `B_p` (or any origin-centred linear image of it): lower bound from
    /// [`modulus_lp`], upper bound from [`lp_modulus_exact`].
    Lp { p: f64 },
    /// `B_p` with the exact modulus as both bounds (Hanner's formula below
    /// `p = 2`).
    LpExact { p: f64 },
    Estimate,
}

/// Samples of `δ_L` with brackets. Lower values form a nondecreasing
/// envelope and upper values a nondecreasing ceiling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusCurve {
    pub body_hash: String,
    pub source: CurveSource,
    pub samples: Vec<ModulusSample>,
}

fn sorted_grid(grid: &[f64]) -> Result<Vec<f64>> {
    for &t in grid {
        check_t(t)?;
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

impl ModulusCurve {
    /// Closed-form curve for `B_p^n`.
    pub fn lp(n: usize, p: f64, grid: &[f64]) -> Result<Self> {
        check_p(p)?;
        let body = ConvexBody::lp_ball(n, p)?;
        let source = CurveSource::Lp { p };
        let samples = sorted_grid(grid)?
            .into_iter()
            .map(|t| Ok(ModulusSample { t, lower: Self::law_lower(p, t)?, upper: lp_modulus_exact(p, t)?, certified: true }))
            .collect::<Result<_>>()?;
        Ok(Self { body_hash: body.content_hash(), source, samples })
    }

    /// Closed-form curve for `B_p^n` whose lower bound is the exact modulus.
    pub fn lp_exact(n: usize, p: f64, grid: &[f64]) -> Result<Self> {
        let mut c = Self::lp(n, p, grid)?;
        c.source = CurveSource::LpExact { p };
        for s in c.samples.iter_mut() {
            s.lower = s.upper;
        }
        Ok(c)
    }

    /// Closed-form curve for the Euclidean ball (and every ellipsoid centred
    /// at the origin).
    pub fn euclidean(n: usize, grid: &[f64]) -> Result<Self> {
        let mut c = Self::lp(n, 2.0, grid)?;
        c.body_hash = ConvexBody::euclidean_ball(n).content_hash();
        Ok(c)
    }

    /// Estimated curve; grid points are estimated independently, then the
    /// brackets are made monotone (δ is nondecreasing in `t`).
    pub fn estimate(body: &ConvexBody, grid: &[f64], budget: &ModulusBudget) -> Result<Self> {
        let grid = sorted_grid(grid)?;
        let estimates: Vec<ModulusEstimate> =
            grid.par_iter().map(|&t| modulus_estimate_with(body, t, budget)).collect::<Result<_>>()?;
        let mut samples: Vec<ModulusSample> = estimates
            .iter()
            .map(|e| ModulusSample { t: e.t, lower: e.lower, upper: e.upper, certified: e.certified })
            .collect();
        let mut floor = 0.0f64;
        for s in samples.iter_mut() {
            if s.certified {
                floor = floor.max(s.lower);
                s.lower = floor;
            }
        }
        let mut ceiling = 1.0f64;
        for s in samples.iter_mut().rev() {
            ceiling = ceiling.min(s.upper);
            s.upper = ceiling;
        }
        Ok(Self { body_hash: body.content_hash(), source: CurveSource::Estimate, samples })
    }

    fn law_lower(p: f64, t: f64) -> Result<f64> {
        modulus_lp(p, t).map(|v| v.0)
    }

    /// Certified lower bound for `δ(t)`: the law for closed-form curves,
    /// otherwise the largest certified sample at or below `t`.
    pub fn lower_at(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        match self.source {
            CurveSource::Lp { p } => return Self::law_lower(p, t),
            CurveSource::LpExact { p } => return lp_modulus_exact(p, t),
            CurveSource::Estimate => {}
        }
        self.samples
            .iter()
            .filter(|s| s.certified && s.t <= t)
            .map(|s| s.lower)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
            .ok_or(Error::UncertifiedCurve(t))
    }

    /// Upper bound for `δ(t)` from the samples at or above `t` (1 if none).
    pub fn upper_at(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        if let CurveSource::Lp { p } | CurveSource::LpExact { p } = self.source {
            return lp_modulus_exact(p, t);
        }
        Ok(self.samples.iter().filter(|s| s.t >= t).map(|s| s.upper).fold(1.0, f64::min))
    }

    pub fn to_json_value(&self) -> Value {
        serde_json::json!({
            "body_hash": self.body_hash,
            "source": self.source,
            "grid": self.samples.iter().map(|s| s.t).collect::<Vec<_>>(),
            "samples": self.samples,
        })
    }
}

fn check_shift(c: f64, r: f64, t: f64) -> Result<()> {
    check_t(t)?;
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::DomainError(format!("C must lie in (0, 1], got {c}")));
    }
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::DomainError(format!("asymmetry ratio must be ≥ 1, got {r}")));
    }
    Ok(())
}

/// `δ_L(Ct)/(1 + (1 − C)r)`: a lower bound for `δ_{L_z}(t)` when
/// `L ⊂ −rL` and `z ∈ (1 − C)L`.
pub fn shift_bound_gauge(curve: &ModulusCurve, c: f64, r: f64, t: f64) -> Result<f64> {
    check_shift(c, r, t)?;
    Ok(curve.lower_at(c * t)? / (1.0 + (1.0 - c) * r))
}

/// `δ_{L°}(C²t/(1 − C + r))/((1 − C)r + 1)`: a lower bound for
/// `δ_{(L_z)°}(t)` under the same hypotheses. `curve` is for `L°`.
pub fn shift_bound_polar(curve: &ModulusCurve, c: f64, r: f64, t: f64) -> Result<f64> {
    check_shift(c, r, t)?;
    Ok(curve.lower_at(c * c * t / (1.0 - c + r))? / ((1.0 - c) * r + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorollaryKind {
    /// `L ⊂ −nL`.
    General,
    /// `L = −L`.
    Symmetric,
}

/// Polar-modulus bound for `z ∈ n/(n+1)·L`: `δ_{L°}(t/(4n³))/(2n)` in
/// general, `δ_{L°}(t/(2n²))/2` for symmetric `L`.
pub fn corollary_polar_bound(kind: CorollaryKind, curve: &ModulusCurve, n: usize, t: f64) -> Result<f64> {
    check_t(t)?;
    if n < 1 {
        return Err(Error::DomainError("dimension must be positive".into()));
    }
    let nf = n as f64;
    match kind {
        CorollaryKind::General => Ok(curve.lower_at(t / (4.0 * nf.powi(3)))? / (2.0 * nf)),
        CorollaryKind::Symmetric => Ok(curve.lower_at(t / (2.0 * nf * nf))? / 2.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_closed_form_at_one() {
        let (v, kind) = modulus_lp(2.0, 1.0).unwrap();
        assert_eq!(kind, ModulusKind::Exact);
        assert!((v - (1.0 - 3f64.sqrt() / 2.0)).abs() < 1e-16);
    }

    #[test]
    fn zero_separation_has_zero_modulus() {
        for p in [1.2, 1.5, 2.0, 3.0, 7.5] {
            assert_eq!(modulus_lp(p, 0.0).unwrap().0, 0.0);
            assert_eq!(lp_modulus_exact(p, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn domains_are_checked() {
        assert!(matches!(modulus_lp(1.0, 0.5), Err(Error::DomainError(_))));
        assert!(matches!(modulus_lp(2.0, 1.5), Err(Error::DomainError(_))));
        assert!(matches!(hanner_modulus(3.0, 0.5), Err(Error::DomainError(_))));
        let c = ModulusCurve::euclidean(2, &[0.5]).unwrap();
        assert!(matches!(shift_bound_gauge(&c, 0.0, 1.0, 0.5), Err(Error::DomainError(_))));
        assert!(matches!(shift_bound_polar(&c, 0.5, 0.5, 0.5), Err(Error::DomainError(_))));
    }

    #[test]
    fn hanner_agrees_with_closed_form_at_two() {
        for t in [0.1, 0.4, 0.9, 1.0] {
            let a = hanner_modulus(2.0, t).unwrap();
            let b = modulus_lp(2.0, t).unwrap().0;
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn hanner_dominates_the_quadratic_bound() {
        for p in [1.1, 1.5, 1.9] {
            for k in 1..=10 {
                let t = k as f64 / 10.0;
                assert!(hanner_modulus(p, t).unwrap() >= modulus_lp(p, t).unwrap().0);
            }
        }
    }

    #[test]
    fn zero_shift_collapses() {
        let c = ModulusCurve::euclidean(2, &[]).unwrap();
        let d = modulus_lp(2.0, 0.7).unwrap().0;
        assert!((shift_bound_gauge(&c, 1.0, 3.0, 0.7).unwrap() - d).abs() < 1e-16);
        assert!((shift_bound_polar(&c, 1.0, 1.0, 0.7).unwrap() - d).abs() < 1e-16);
        assert_eq!(shift_bound_gauge(&c, 0.4, 2.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn estimated_curve_needs_a_certified_sample_below() {
        let c = ModulusCurve {
            body_hash: String::new(),
            source: CurveSource::Estimate,
            samples: vec![
                ModulusSample { t: 0.5, lower: 0.02, upper: 0.03, certified: true },
                ModulusSample { t: 0.8, lower: 0.01, upper: 0.09, certified: false },
            ],
        };
        assert_eq!(c.lower_at(0.4), Err(Error::UncertifiedCurve(0.4)));
        assert_eq!(c.lower_at(0.9).unwrap(), 0.02);
        assert_eq!(c.upper_at(0.6).unwrap(), 0.09);
        assert_eq!(c.upper_at(0.95).unwrap(), 1.0);
    }
}

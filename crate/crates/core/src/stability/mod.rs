//! Stability engine: `ε₀(L)`, `r(ε)` and the simplex-proximity bound
//! `1 + 40n³r` in the three cases (general smooth, symmetric smooth,
//! ellipsoid), the ℓ_p corollary, the diameter corollary and end-to-end
//! validation against computed distances.

mod exact;
mod lp;
mod validate;

pub use exact::{case3_exact, diameter_bound, ExactCheck};
pub use lp::{lp_case2_holds, lp_corollary, lp_corollary_branch, LpBranch, LpCorollary};
pub use validate::{
    polar_curve_for, validate_batch, validate_stability, validate_stability_with, StabilityOptions, NamedCheck, StabilityReport, StabilityStatus,
    EPSILON_FLOOR, PROXIMITY_TOL,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moduli::ModulusCurve;

/// Bisection steps of [`solve_r`].
pub const BISECTION_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityKind {
    /// Smooth `L`, no symmetry assumed.
    General,
    /// Smooth, centrally symmetric `L`.
    Symmetric,
    Ellipsoid,
}

impl StabilityKind {
    pub fn needs_curve(self) -> bool {
        self != StabilityKind::Ellipsoid
    }

    pub fn name(self) -> &'static str {
        match self {
            StabilityKind::General => "general",
            StabilityKind::Symmetric => "symmetric",
            StabilityKind::Ellipsoid => "ellipsoid",
        }
    }
}

impl std::str::FromStr for StabilityKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(StabilityKind::General),
            "symmetric" => Ok(StabilityKind::Symmetric),
            "ellipsoid" => Ok(StabilityKind::Ellipsoid),
            _ => Err(Error::Parse(format!("unknown stability kind {s:?}"))),
        }
    }
}

fn check_n(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::DomainError("dimension must be at least 1".into()));
    }
    Ok(n as f64)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::DomainError(format!("ε = {eps} must be finite and ≥ 0")));
    }
    Ok(())
}

fn curve_for(kind: StabilityKind, curve: Option<&ModulusCurve>) -> Result<&ModulusCurve> {
    curve.ok_or_else(|| Error::DomainError(format!("the {} case needs a modulus curve for L°", kind.name())))
}

/// Upper end of the admissible `r`: `1/(20n³)`.
pub fn r_guard(n: usize) -> f64 {
    let n = n as f64;
    1.0 / (20.0 * n * n * n)
}

/// Argument scale `a` and right-hand factor `c` of the case inequality
/// `r·δ(a·r) ≥ c·ε`.
fn case_coefficients(kind: StabilityKind, n: f64) -> (f64, f64) {
    match kind {
        StabilityKind::General => (1.0 / (4.0 * n.powi(3)), 4.0 * n * n),
        StabilityKind::Symmetric => (1.0 / (2.0 * n * n), 4.0 * n),
        StabilityKind::Ellipsoid => unreachable!("closed-form case"),
    }
}

/// `ε₀(L)` from the certified lower envelope of `δ_{L°}`.
pub fn epsilon0(kind: StabilityKind, n: usize, curve: Option<&ModulusCurve>) -> Result<f64> {
    let nf = check_n(n)?;
    match kind {
        StabilityKind::General => Ok(curve_for(kind, curve)?.lower_at(1.0 / (80.0 * nf.powi(6)))? / (80.0 * nf.powi(5))),
        StabilityKind::Symmetric => Ok(curve_for(kind, curve)?.lower_at(1.0 / (40.0 * nf.powi(5)))? / (80.0 * nf.powi(4))),
        StabilityKind::Ellipsoid => Ok(1.0 / (128_000.0 * nf.powi(9))),
    }
}

/// Smallest certified `r` satisfying the case condition. Case 3 is the
/// closed form `(16ε)^{1/3}`. Cases 1–2 bisect on `[0, 1/(20n³)]`; the right
/// end is feasible whenever `ε ≤ ε₀` because `δ` is nondecreasing.
pub fn solve_r(kind: StabilityKind, n: usize, eps: f64, curve: Option<&ModulusCurve>) -> Result<f64> {
    let nf = check_n(n)?;
    check_eps(eps)?;
    let eps0 = epsilon0(kind, n, curve)?;
    if eps > eps0 {
        return Err(Error::NotApplicable(format!("ε = {eps:e} exceeds ε₀ = {eps0:e}")));
    }
    if eps == 0.0 {
        return Ok(0.0);
    }
    if kind == StabilityKind::Ellipsoid {
        return Ok((16.0 * eps).cbrt());
    }
    let curve = curve_for(kind, curve)?;
    let (a, c) = case_coefficients(kind, nf);
    let rhs = c * eps;
    // An uncertified argument counts as infeasible.
    let feasible = |r: f64| curve.lower_at(a * r).map(|d| r * d >= rhs).unwrap_or(false);
    let mut hi = r_guard(n);
    if !feasible(hi) {
        // ε ≤ ε₀ makes the end point feasible up to the last rounding of
        // the two products; anything worse means an inconsistent curve.
        let lhs = hi * curve.lower_at(a * hi)?;
        if lhs < rhs * (1.0 - 1e-12) {
            return Err(Error::NoSolution(format!("r·δ(a·r) = {lhs:e} < {rhs:e} at r = 1/(20n³)")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `1 + 40n³r`.
pub fn bound_from_r(n: usize, r: f64) -> f64 {
    let n = n as f64;
    1.0 + 40.0 * n * n * n * r
}

/// Proof-internal threshold `ε₁`; exposed for traces only.
pub fn epsilon1(kind: StabilityKind, n: usize, r: f64, curve: Option<&ModulusCurve>) -> Result<f64> {
    let nf = check_n(n)?;
    match kind {
        StabilityKind::General => Ok(curve_for(kind, curve)?.lower_at(r / (4.0 * nf.powi(3)))? / (2.0 * nf)),
        StabilityKind::Symmetric => Ok(curve_for(kind, curve)?.lower_at(r / (2.0 * nf * nf))? / 2.0),
        StabilityKind::Ellipsoid => Ok(r * r / 8.0),
    }
}

/// One evaluation of the main bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCase {
    pub kind: StabilityKind,
    pub n: usize,
    /// Absent for the ellipsoid case.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polar_curve: Option<ModulusCurve>,
    pub epsilon: f64,
    pub epsilon0: f64,
    /// Populated iff `ε ≤ ε₀`.
    pub r: Option<f64>,
    pub bound: Option<f64>,
}

impl StabilityCase {
    pub fn new(kind: StabilityKind, n: usize, eps: f64, polar_curve: Option<ModulusCurve>) -> Result<Self> {
        check_eps(eps)?;
        let curve = if kind.needs_curve() { Some(curve_for(kind, polar_curve.as_ref())?.clone()) } else { None };
        let epsilon0 = epsilon0(kind, n, curve.as_ref())?;
        let r = if eps <= epsilon0 { Some(solve_r(kind, n, eps, curve.as_ref())?) } else { None };
        let bound = r.map(|r| bound_from_r(n, r));
        Ok(StabilityCase { kind, n, polar_curve: curve, epsilon: eps, epsilon0, r, bound })
    }

    pub fn epsilon1(&self) -> Option<f64> {
        self.r.and_then(|r| epsilon1(self.kind, self.n, r, self.polar_curve.as_ref()).ok())
    }

    /// `ε ≤ ε₀` with `r` present, `0 ≤ r ≤ 1/(20n³)` and the stored bound
    /// equal to `1 + 40n³r`.
    pub fn invariants_hold(&self) -> bool {
        match (self.r, self.bound) {
            (Some(r), Some(b)) => {
                self.epsilon <= self.epsilon0 && (0.0..=r_guard(self.n) + 1e-15).contains(&r) && b == bound_from_r(self.n, r)
            }
            (None, None) => self.epsilon > self.epsilon0,
            _ => false,
        }
    }
}

/// `1 + 40n³r` for a solved case.
pub fn stability_bound(case: &StabilityCase) -> Result<f64> {
    case.r
        .map(|r| bound_from_r(case.n, r))
        .ok_or_else(|| Error::NotApplicable(format!("ε = {:e} exceeds ε₀ = {:e}", case.epsilon, case.epsilon0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipsoid_threshold_and_closed_form() {
        assert_eq!(epsilon0(StabilityKind::Ellipsoid, 2, None).unwrap(), 1.0 / 65_536_000.0);
        let e0 = epsilon0(StabilityKind::Ellipsoid, 3, None).unwrap();
        assert!((e0 - 1.0 / 2_519_424_000.0).abs() < 1e-25);
        let r = solve_r(StabilityKind::Ellipsoid, 3, e0, None).unwrap();
        assert!((r - r_guard(3)).abs() < 1e-18);
    }

    #[test]
    fn zero_epsilon_gives_the_simplex() {
        let curve = ModulusCurve::euclidean(2, &[]).unwrap();
        for kind in [StabilityKind::General, StabilityKind::Symmetric, StabilityKind::Ellipsoid] {
            let case = StabilityCase::new(kind, 2, 0.0, Some(curve.clone())).unwrap();
            assert_eq!(case.r, Some(0.0));
            assert_eq!(stability_bound(&case).unwrap(), 1.0);
        }
    }

    #[test]
    fn bisection_lands_on_the_boundary() {
        let curve = ModulusCurve::lp(3, 3.0, &[]).unwrap();
        let n = 3;
        let eps = 0.5 * epsilon0(StabilityKind::Symmetric, n, Some(&curve)).unwrap();
        let r = solve_r(StabilityKind::Symmetric, n, eps, Some(&curve)).unwrap();
        let lhs = |r: f64| r * curve.lower_at(r / 18.0).unwrap();
        assert!(lhs(r) >= 12.0 * eps);
        assert!(lhs(r * (1.0 - 1e-12)) < 12.0 * eps);
    }

    #[test]
    fn above_threshold_is_not_applicable() {
        assert!(matches!(solve_r(StabilityKind::Ellipsoid, 2, 1e-3, None), Err(Error::NotApplicable(_))));
        let case = StabilityCase::new(StabilityKind::Ellipsoid, 2, 1e-3, None).unwrap();
        assert!(case.r.is_none() && case.invariants_hold());
        assert!(stability_bound(&case).is_err());
    }

    #[test]
    fn missing_curve_is_rejected() {
        assert!(matches!(epsilon0(StabilityKind::General, 2, None), Err(Error::DomainError(_))));
    }
}

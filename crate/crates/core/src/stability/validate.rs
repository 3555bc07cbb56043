//! End-to-end check of the main bound on a pair `(K, L)`.

use rayon::prelude::*;
use serde::Serialize;

use super::{bound_from_r, epsilon0, epsilon1, r_guard, solve_r, StabilityKind};
use crate::bodies::{asymmetry_constant, ConvexBody, Shape};
use crate::distance::{distance_lower_via_asymmetry, simplex_proximity_with, DistanceBound, Witness, REPLAY_TOL};
use crate::error::{Error, Result};
use crate::john::{john_position, SolverOptions};
use crate::linalg::Vector;
use crate::moduli::{ModulusBudget, ModulusCurve};

/// `ε` below this is rounding noise of the asymmetry LP and is set to 0.
/// The cube root in `r = (16ε)^{1/3}` would otherwise turn 1e-16 into a
/// visible bound of about 1 + 1e-3·n³.
pub const EPSILON_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Slack between computed simplex proximity and the bound before a
/// violation is reported; the witness-replay tolerance.
pub const PROXIMITY_TOL: f64 = REPLAY_TOL;

#[derive(Debug, Clone)]
pub struct StabilityOptions {
    pub solver: SolverOptions,
    /// Budget for estimated polar moduli (planar bodies without a closed form).
    pub modulus: ModulusBudget,
    pub tolerance: f64,
    /// Externally certified lower bound on `d_G(K, L)`; replaces the
    /// asymmetry bound when larger.
    pub lower_bound: Option<f64>,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            solver: SolverOptions::default(),
            modulus: ModulusBudget::default(),
            tolerance: PROXIMITY_TOL,
            lower_bound: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityStatus {
    Pass,
    /// Simplex proximity above the bound: a counterexample candidate.
    Violation,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedCheck {
    pub name: &'static str,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub kind: StabilityKind,
    pub n: usize,
    pub k_hash: String,
    pub l_hash: String,
    /// `L` is used as `L − placement` (its asymmetry centre).
    pub placement: Vec<f64>,
    /// `s(L)`; the placement meets `L ⊂ −nL` iff this is at most `n`.
    pub l_asymmetry: f64,
    pub lower_bound: f64,
    pub lower_certified: bool,
    /// `1 − lower/n` before clamping and flooring.
    pub epsilon_raw: f64,
    pub epsilon: f64,
    pub epsilon0: Option<f64>,
    pub r: Option<f64>,
    pub bound: Option<f64>,
    /// Trace only.
    pub epsilon1: Option<f64>,
    pub curve: Option<String>,
    /// Smaller of the two routes below.
    pub proximity: Option<f64>,
    /// Through the John certificate of `K` in `L`.
    pub proximity_certificate: Option<f64>,
    /// Direct positioning of the simplex template in `K`.
    pub proximity_direct: Option<f64>,
    pub status: StabilityStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub checks: Vec<NamedCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl StabilityReport {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("stability report is serializable")
    }

    fn not_applicable(mut self, reason: String) -> Self {
        self.status = StabilityStatus::NotApplicable;
        self.reason = Some(reason);
        self
    }
}

fn is_ellipsoid(l: &ConvexBody) -> bool {
    match l.shape() {
        Shape::Ellipsoid { .. } => true,
        Shape::LpBall { p } => *p == 2.0,
        _ => false,
    }
}

/// Modulus curve of `L°` for a placed `L`: closed form for origin-centred
/// ℓ_p balls and ellipsoids, a certified estimate for planar bodies, and an
/// error otherwise. `None` for the ellipsoid case.
pub fn polar_curve_for(l: &ConvexBody, kind: StabilityKind, budget: &ModulusBudget) -> Result<Option<ModulusCurve>> {
    if !kind.needs_curve() {
        return Ok(None);
    }
    let n = l.dim();
    let centred = l.pose().is_linear();
    match l.shape() {
        Shape::LpBall { p } if centred => return ModulusCurve::lp_exact(n, *p / (*p - 1.0), &[]).map(Some),
        Shape::Ellipsoid { .. } if centred => return ModulusCurve::lp_exact(n, 2.0, &[]).map(Some),
        _ => {}
    }
    if n != 2 {
        return Err(Error::Unsupported(format!("certified modulus estimates need n = 2, got {n}")));
    }
    let nf = n as f64;
    let mut grid: Vec<f64> = (0..=24).map(|k| 0.5f64.powi(k)).collect();
    grid.extend([0.0, 1.0 / (80.0 * nf.powi(6)), 1.0 / (40.0 * nf.powi(5))]);
    ModulusCurve::estimate(&l.polar()?, &grid, budget).map(Some)
}

/// [`validate_stability_with`] with default options and the polar curve
/// chosen by [`polar_curve_for`].
pub fn validate_stability(l: &ConvexBody, k: &ConvexBody, kind: StabilityKind) -> Result<StabilityReport> {
    validate_stability_with(l, k, kind, None, &StabilityOptions::default())
}

/// Places `L` at its asymmetry centre, derives `ε` from a certified lower
/// bound on `d_G(K, L)`, solves for `r` and compares `1 + 40n³r` with the
/// computed upper bound on `d(K, S_n)`. Inapplicable inputs are reported
/// with a reason rather than failing.
pub fn validate_stability_with(
    l: &ConvexBody,
    k: &ConvexBody,
    kind: StabilityKind,
    curve: Option<&ModulusCurve>,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    let n = l.dim();
    if k.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: k.dim() });
    }
    let asym = asymmetry_constant(l)?;
    if kind == StabilityKind::Ellipsoid && !is_ellipsoid(l) {
        return Err(Error::DomainError("the ellipsoid case needs L to be an ellipsoid".into()));
    }
    if kind == StabilityKind::Symmetric && !(asym.certified && asym.value <= 1.0 + 1e-9) {
        return Err(Error::DomainError(format!("the symmetric case needs s(L) = 1, got {}", asym.value)));
    }
    let centre = Vector::from_column_slice(&asym.center);
    let placed = l.shift(&centre);

    let lb = distance_lower_via_asymmetry(k, l)?;
    // The asymmetry ratio bounds d_G only when one body is symmetric.
    let mut lower = if lb.symmetric_pair { lb.value } else { 1.0 };
    let mut lower_certified = lb.certified;
    if let Some(v) = opts.lower_bound {
        if v > lower {
            lower = v;
            lower_certified = true;
        }
    }
    let nf = n as f64;
    let epsilon_raw = 1.0 - lower / nf;
    let epsilon = if epsilon_raw < EPSILON_FLOOR { 0.0 } else { epsilon_raw };

    let mut report = StabilityReport {
        kind,
        n,
        k_hash: k.content_hash(),
        l_hash: l.content_hash(),
        placement: asym.center.clone(),
        l_asymmetry: asym.value,
        lower_bound: lower,
        lower_certified,
        epsilon_raw,
        epsilon,
        epsilon0: None,
        r: None,
        bound: None,
        epsilon1: None,
        curve: None,
        proximity: None,
        proximity_certificate: None,
        proximity_direct: None,
        status: StabilityStatus::NotApplicable,
        reason: None,
        checks: vec![
            NamedCheck { name: "lower_bound_certified", holds: lower_certified },
            NamedCheck { name: "placement_in_minus_n_l", holds: asym.value <= nf + 1e-9 },
        ],
        witness: None,
    };
    if !lower_certified {
        return Ok(report.not_applicable("no certified lower bound on d_G(K, L)".into()));
    }

    let owned;
    let curve = match curve {
        Some(c) => Some(c),
        None => match polar_curve_for(&placed, kind, &opts.modulus) {
            Ok(c) => {
                owned = c;
                owned.as_ref()
            }
            Err(e) => return Ok(report.not_applicable(format!("no modulus curve for L°: {e}"))),
        },
    };
    report.curve = curve.map(|c| serde_json::to_string(&c.source).expect("curve source is serializable"));
    let eps0 = match epsilon0(kind, n, curve) {
        Ok(v) => v,
        Err(e) => return Ok(report.not_applicable(format!("ε₀ unavailable: {e}"))),
    };
    report.epsilon0 = Some(eps0);
    let applicable = epsilon <= eps0;
    report.checks.push(NamedCheck { name: "epsilon_le_epsilon0", holds: applicable });
    if kind.needs_curve() && eps0 <= 0.0 {
        return Ok(report.not_applicable("δ_{L°} vanishes at the ε₀ argument (L is not smooth)".into()));
    }
    if !applicable {
        return Ok(report.not_applicable(format!("ε = {epsilon:e} exceeds ε₀ = {eps0:e}")));
    }
    let r = solve_r(kind, n, epsilon, curve)?;
    let bound = bound_from_r(n, r);
    report.r = Some(r);
    report.bound = Some(bound);
    report.epsilon1 = epsilon1(kind, n, r, curve).ok();
    report.checks.push(NamedCheck { name: "r_le_guard", holds: r <= r_guard(n) + 1e-15 });
    report.checks.push(NamedCheck { name: "bound_consistency", holds: bound == bound_from_r(n, r) });

    let via_cert: Option<DistanceBound> = john_position(k, &placed, &opts.solver)
        .ok()
        .and_then(|j| simplex_proximity_with(k, Some(&j.certificate), &opts.solver).ok());
    let direct: Option<DistanceBound> = simplex_proximity_with(k, None, &opts.solver).ok();
    report.proximity_certificate = via_cert.as_ref().map(|d| d.upper);
    report.proximity_direct = direct.as_ref().map(|d| d.upper);
    let best = match (via_cert, direct) {
        (Some(a), Some(b)) => Some(if a.upper <= b.upper { a } else { b }),
        (a, b) => a.or(b),
    }
    .ok_or_else(|| Error::NoSolution("both simplex-proximity routes failed".into()))?;
    let holds = best.upper <= bound + opts.tolerance;
    report.proximity = Some(best.upper);
    report.checks.push(NamedCheck { name: "proximity_le_bound", holds });
    report.status = if holds { StabilityStatus::Pass } else { StabilityStatus::Violation };
    // The witness certifies the proximity value, and for a violation it is
    // the counterexample dump.
    report.witness = best.witness;
    Ok(report)
}

/// Validates many pairs `(L, K)` in parallel; order is preserved.
pub fn validate_batch(
    pairs: &[(ConvexBody, ConvexBody)],
    kind: StabilityKind,
    opts: &StabilityOptions,
) -> Vec<Result<StabilityReport>> {
    pairs.par_iter().map(|(l, k)| validate_stability_with(l, k, kind, None, opts)).collect()
}

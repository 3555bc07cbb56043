//! The ℓ_p corollary: the symmetric case with `L = B_p^n`, whose polar is
//! `B_q^n`, `1/p + 1/q = 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moduli::ModulusCurve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpBranch {
    /// `2 ≤ p < ∞`; the polar modulus is quadratic.
    Large,
    /// `1 < p ≤ 2`; the polar modulus has power type `q`.
    Small,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpCorollary {
    pub p: f64,
    pub n: usize,
    pub epsilon: f64,
    pub branch: LpBranch,
    pub threshold: f64,
    pub applicable: bool,
    pub bound: f64,
    /// Exponent of `ε` in the bound.
    pub exponent: f64,
    /// The `r` written in the corollary's proof.
    pub r_stated: f64,
    /// The `r` the displayed bound corresponds to, `(bound − 1)/(40n³)`.
    pub r_implied: f64,
}

fn check(p: f64, n: usize, eps: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::DomainError(format!("p = {p} must lie in (1, ∞)")));
    }
    if n < 1 {
        return Err(Error::DomainError("dimension must be at least 1".into()));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::DomainError(format!("ε = {eps} must be finite and ≥ 0")));
    }
    Ok(())
}

/// Evaluates the branch matching `p` (the large-`p` branch at `p = 2`).
pub fn lp_corollary(p: f64, n: usize, eps: f64) -> Result<LpCorollary> {
    check(p, n, eps)?;
    lp_corollary_branch(if p >= 2.0 { LpBranch::Large } else { LpBranch::Small }, p, n, eps)
}

/// Evaluates a named branch; `p` must lie in its range.
pub fn lp_corollary_branch(branch: LpBranch, p: f64, n: usize, eps: f64) -> Result<LpCorollary> {
    check(p, n, eps)?;
    let nf = n as f64;
    let (threshold, exponent, coefficient, r_stated) = match branch {
        LpBranch::Large => {
            if p < 2.0 {
                return Err(Error::DomainError(format!("large-p branch needs p ≥ 2, got {p}")));
            }
            let c = (p - 1.0).cbrt();
            let threshold = 1.0 / (2f64.powi(18) * (p - 1.0) * nf.powi(14));
            (threshold, 1.0 / 3.0, 320.0 * c * nf.powf(14.0 / 3.0), 8.0 * c * nf.powf(5.0 / 3.0) * eps.cbrt())
        }
        LpBranch::Small => {
            if p > 2.0 {
                return Err(Error::DomainError(format!("small-p branch needs p ≤ 2, got {p}")));
            }
            let q = p / (p - 1.0);
            let e = (p - 1.0) / (2.0 * p - 1.0);
            let threshold = 1.0 / (q * 2f64.powf((15.0 * p - 7.0) / (p - 1.0)) * nf.powf((11.0 * p - 5.0) / (p - 1.0)));
            let coefficient = 160.0 * nf.powf(4.5 + 1.0 / (2.0 * (2.0 * p - 1.0))) * q.powf(e);
            let r = 40.0 * nf.powf((3.0 * p - 1.0) / (2.0 * p - 1.0)) * q.powf(e) * eps.powf(e);
            (threshold, e, coefficient, r)
        }
    };
    let growth = coefficient * eps.powf(exponent);
    Ok(LpCorollary {
        p,
        n,
        epsilon: eps,
        branch,
        threshold,
        applicable: eps <= threshold,
        bound: 1.0 + growth,
        exponent,
        r_stated,
        r_implied: growth / (40.0 * nf.powi(3)),
    })
}

/// Whether `r` satisfies the symmetric-case condition
/// `r·δ_{B_q}(r/(2n²)) ≥ 4nε` with the closed-form lower bound for `δ_{B_q}`.
pub fn lp_case2_holds(p: f64, n: usize, eps: f64, r: f64) -> Result<bool> {
    check(p, n, eps)?;
    let q = p / (p - 1.0);
    let nf = n as f64;
    let t = r / (2.0 * nf * nf);
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::DomainError(format!("r = {r} puts the modulus argument outside [0, 1]")));
    }
    let delta = ModulusCurve::lp(n, q, &[])?.lower_at(t)?;
    Ok(r * delta >= 4.0 * nf * eps)
}

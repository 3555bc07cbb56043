//! Exact rational replays of the fixed-constant arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// One replayed step: `lhs relation rhs`, with both sides as exact `p/q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactCheck {
    pub label: String,
    pub lhs: String,
    pub relation: &'static str,
    pub rhs: String,
    pub holds: bool,
}

impl ExactCheck {
    fn new(label: &str, lhs: &BigRational, relation: &'static str, rhs: &BigRational) -> Self {
        let holds = match relation {
            "=" => lhs == rhs,
            "<" => lhs < rhs,
            "<=" => lhs <= rhs,
            _ => unreachable!("unknown relation"),
        };
        ExactCheck { label: label.into(), lhs: lhs.to_string(), relation, rhs: rhs.to_string(), holds }
    }
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn pow(base: &BigRational, e: i32) -> BigRational {
    if e >= 0 {
        (0..e).fold(BigRational::one(), |acc, _| acc * base)
    } else {
        pow(base, -e).recip()
    }
}

/// Exact cube root of a nonnegative rational, if it is a perfect cube.
fn exact_cbrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    if q.is_zero() {
        return Some(BigRational::zero());
    }
    let (num, den) = (q.numer(), q.denom());
    let (a, b) = (num.cbrt(), den.cbrt());
    (&a * &a * &a == *num && &b * &b * &b == *den).then(|| BigRational::new(a, b))
}

fn check_dim(n: usize) -> Result<i64> {
    if n < 2 {
        return Err(Error::DomainError(format!("dimension {n} must be at least 2")));
    }
    Ok(n as i64)
}

/// Ellipsoid case at `ε = ε₀ = 1/(128000n⁹)`: `r = (16ε₀)^{1/3} = 1/(20n³)`
/// and `40n³r = 2`.
pub fn case3_exact(n: usize) -> Result<Vec<ExactCheck>> {
    let nq = int(check_dim(n)?);
    let eps0 = (int(128_000) * pow(&nq, 9)).recip();
    let guard = (int(20) * pow(&nq, 3)).recip();
    let r = exact_cbrt(&(int(16) * &eps0)).ok_or_else(|| Error::NoSolution("16ε₀ is not a rational cube".into()))?;
    Ok(vec![
        ExactCheck::new("r = (16ε₀)^{1/3} equals 1/(20n³)", &r, "=", &guard),
        ExactCheck::new("r³ = 16ε₀", &pow(&r, 3), "=", &(int(16) * &eps0)),
        ExactCheck::new("40n³r = 2", &(int(40) * pow(&nq, 3) * &r), "=", &int(2)),
    ])
}

/// `n² − 2⁻²²n⁻⁷` with the proof's arithmetic replayed exactly: with
/// `ε = 2⁻²²n⁻⁹` the ellipsoid case applies and gives `d(·, S_n) ≤ 13/8`,
/// which is incompatible with `d(·, B_2^n) ≥ (1−ε)n`.
pub fn diameter_bound(n: usize) -> Result<(BigRational, Vec<ExactCheck>)> {
    let nq = int(check_dim(n)?);
    let two = int(2);
    let eps = pow(&two, -22) * pow(&nq, -9);
    let eps0 = (int(128_000) * pow(&nq, 9)).recip();
    let r = exact_cbrt(&(int(16) * &eps)).ok_or_else(|| Error::NoSolution("16ε is not a rational cube".into()))?;
    let growth = int(40) * pow(&nq, 3) * &r;
    let simplex_side = int(1) + &growth;
    let mut trace = vec![
        ExactCheck::new("ε = 2⁻²²n⁻⁹ ≤ ε₀ = 1/(128000n⁹)", &eps, "<=", &eps0),
        ExactCheck::new("r = (16ε)^{1/3} = 2⁻⁶n⁻³", &r, "=", &(pow(&two, -6) * pow(&nq, -3))),
        ExactCheck::new("r ≤ 1/(20n³)", &r, "<=", &(int(20) * pow(&nq, 3)).recip()),
        ExactCheck::new("40n³r = 5/8", &growth, "=", &BigRational::new(5.into(), 8.into())),
        ExactCheck::new("(1 + 5/8)² < 3", &(&simplex_side * &simplex_side), "<", &int(3)),
        ExactCheck::new("3 < (1−ε)n²", &int(3), "<", &((int(1) - &eps) * &nq * &nq)),
    ];
    let bound = &nq * &nq - pow(&two, -22) * pow(&nq, -7);
    trace.push(ExactCheck::new("n² − 2⁻²²n⁻⁷ = (1−ε)n²", &bound, "=", &((int(1) - &eps) * &nq * &nq)));
    Ok((bound, trace))
}

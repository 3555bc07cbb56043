use serde::{Serialize, Serializer};

use super::contacts::ContactPair;
use super::position::Positioning;
use super::weights::{residuals, Residuals, IDENTITY_TOL, SUM_TOL};
use crate::bodies::{AffineMap, AffineMapJson, ConvexBody};
use crate::error::Result;
use crate::linalg::Vector;

/// How the certificate's weights were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftMethod {
    /// Unshifted-frame weights carried to `z = Σλu/(n+1)`.
    ClosedForm,
    /// Nonnegative least squares on the shifted contacts.
    ShiftedNnls,
    /// Derivative-free search over `z`.
    Search,
}

/// Contacts as parallel arrays `u[i]`, `v[i]`, `weights[i]`, all expressed
/// in the frame shifted by `shift`.
#[derive(Debug, Clone, Serialize)]
pub struct JohnCertificate {
    pub dim: usize,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub residual_identity: f64,
    pub residual_u: f64,
    pub residual_v: f64,
    pub weight_sum: f64,
    pub shift: Vec<f64>,
    pub method: ShiftMethod,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "serialize_opt_map")]
    pub pose: Option<AffineMap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<Positioning>,
}

fn serialize_opt_map<S: Serializer>(m: &Option<AffineMap>, s: S) -> std::result::Result<S::Ok, S::Error> {
    m.as_ref().map(AffineMapJson::from).serialize(s)
}

impl JohnCertificate {
    pub(crate) fn new(n: usize, pairs: &[ContactPair], weights: Vec<f64>, shift: &Vector, method: ShiftMethod) -> Self {
        let r = residuals(pairs, &weights, n);
        let rows = |f: &dyn Fn(&ContactPair) -> &Vector| -> Vec<Vec<f64>> {
            pairs.iter().map(|p| f(p).iter().copied().collect()).collect()
        };
        JohnCertificate {
            dim: n,
            u: rows(&|p| &p.u),
            v: rows(&|p| &p.v),
            weights,
            residual_identity: r.identity,
            residual_u: r.u,
            residual_v: r.v,
            weight_sum: r.weight_sum,
            shift: shift.iter().copied().collect(),
            method,
            pose: None,
            solver: None,
        }
    }

    pub fn pairs(&self) -> Vec<ContactPair> {
        self.u
            .iter()
            .zip(&self.v)
            .map(|(u, v)| ContactPair { u: Vector::from_column_slice(u), v: Vector::from_column_slice(v) })
            .collect()
    }

    pub fn shift_vector(&self) -> Vector {
        Vector::from_column_slice(&self.shift)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residual_identity.max(self.residual_u).max(self.residual_v)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("certificate is serializable")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub value: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(value: f64, tol: f64) -> Self {
        Check { value, pass: value <= tol }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub identity: Check,
    pub sum_u: Check,
    pub sum_v: Check,
    /// `|Σ a_i − n|`.
    pub weight_sum: Check,
    /// Contact count against `n² + n`.
    pub count: Check,
    /// Most negative weight, as a nonnegative number.
    pub nonnegative: Check,
    /// `max |⟨u_i, v_i⟩ − 1|`.
    pub normalization: Check,
}

impl DecompositionReport {
    pub fn passed(&self) -> bool {
        [&self.identity, &self.sum_u, &self.sum_v, &self.weight_sum, &self.count, &self.nonnegative, &self.normalization]
            .iter()
            .all(|c| c.pass)
    }
}

/// Recomputes every identity from the raw pairs and weights.
pub fn verify_decomposition(cert: &JohnCertificate, n: usize, tol: f64) -> DecompositionReport {
    let pairs = cert.pairs();
    let r: Residuals = residuals(&pairs, &cert.weights, n);
    let m = cert.weights.len();
    let normalization = pairs.iter().map(|p| (p.u.dot(&p.v) - 1.0).abs()).fold(0.0, f64::max);
    let most_negative = cert.weights.iter().fold(0.0f64, |acc, &a| acc.max(-a));
    DecompositionReport {
        identity: Check::at_most(r.identity, tol),
        sum_u: Check::at_most(r.u, tol),
        sum_v: Check::at_most(r.v, tol),
        weight_sum: Check::at_most((r.weight_sum - n as f64).abs(), SUM_TOL.max(tol)),
        count: Check { value: m as f64, pass: m <= n * n + n && m == pairs.len() },
        nonnegative: Check::at_most(most_negative, 0.0),
        normalization: Check::at_most(normalization, tol),
    }
}

/// Default tolerance for [`verify_decomposition`] on produced certificates.
pub const VERIFY_TOL: f64 = 1e-5;
const _: () = assert!(IDENTITY_TOL <= VERIFY_TOL);

/// Largest deviation from the boundary conditions on the pairs:
/// `u ∈ ∂(K−z) ∩ ∂(L−z)` and `v ∈ ∂(K−z)° ∩ ∂(L−z)°`.
pub fn boundary_defect(cert: &JohnCertificate, k: &ConvexBody, l: &ConvexBody) -> Result<f64> {
    let z = cert.shift_vector();
    let (ks, ls) = (k.shift(&z), l.shift(&z));
    let mut worst = 0.0f64;
    for p in cert.pairs() {
        for d in [ks.gauge(&p.u)?, ls.gauge(&p.u)?, ks.support(&p.v)?, ls.support(&p.v)?, p.u.dot(&p.v)] {
            worst = worst.max((d - 1.0).abs());
        }
    }
    Ok(worst)
}

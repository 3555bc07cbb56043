use thiserror::Error;

/// Errors raised by the geometric kernel, the positioning solver and the
/// stability engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("origin is not an interior point of the body")]
    OriginNotInterior,
    #[error("degenerate body: {0}")]
    DegenerateBody(String),
    #[error("H-polytope is unbounded")]
    UnboundedBody,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("affine map is singular (|det| = {0:e})")]
    SingularMap(f64),
    #[error("inner body is not contained in the outer body")]
    NotNested,
    #[error("no strictly feasible starting point")]
    InfeasibleStart,
    #[error("solver stalled: {0}")]
    SolverStall(String),
    #[error("no contact points within tolerance {0:e}")]
    NoContacts(f64),
    #[error("nonnegative least squares is rank deficient")]
    RankDeficient,
    #[error("decomposition shift search failed (best residual {residual:e})")]
    SearchFailed { residual: f64, best_shift: Vec<f64> },
    #[error("selected simplex vertices are affinely dependent")]
    DegenerateSimplex,
    #[error("argument out of domain: {0}")]
    DomainError(String),
    #[error("modulus curve has no certified value at t = {0}")]
    UncertifiedCurve(f64),
    #[error("no certified solution: {0}")]
    NoSolution(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("linear program is infeasible")]
    Infeasible,
}

pub type Result<T> = std::result::Result<T, Error>;

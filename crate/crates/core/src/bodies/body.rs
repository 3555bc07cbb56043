//! Convex body representations and the pointwise kernel: gauge, support,
//! membership, polarity, shifting and affine images.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::affine::AffineMap;
use super::hull::{enumerate_facets, enumerate_vertices, reduce_to_extreme_points, Facets};
use crate::error::{Error, Result};
use crate::linalg::{affinely_spanning, centroid, regular_simplex, unit, Matrix, Vector};
use crate::lp::{LinearProgram, Relation};

/// Interior radius required around the origin before taking a polar.
pub const POLAR_MIN_RADIUS: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct VPolytope {
    vertices: Vec<Vector>,
    facets: OnceLock<std::result::Result<Facets, Error>>,
    origin_depth: OnceLock<f64>,
}

#[derive(Debug, Clone)]
pub struct HPolytope {
    normals: Vec<Vector>,
    offsets: Vec<f64>,
    vertices: OnceLock<Vec<Vector>>,
    chebyshev: OnceLock<(Vector, f64)>,
}

#[derive(Debug, Clone)]
pub enum Shape {
    VPolytope(VPolytope),
    HPolytope(HPolytope),
    /// Unit ball of the ℓ_p norm.
    LpBall { p: f64 },
    /// `{x : xᵀ Q x ≤ 1}`; the inverse is kept for the support function.
    Ellipsoid { shape: Matrix, inverse: Matrix },
    /// Polar of another body taken about the origin. Only produced when the
    /// polar has no closed form among the other kinds (translated smooth
    /// bodies).
    Polar(Box<ConvexBody>),
}

/// A full-dimensional compact convex set.
///
/// Polytopes carry their pose baked into the vertex/facet data; smooth kinds
/// keep `pose` explicitly and are evaluated in base coordinates.
#[derive(Debug, Clone)]
pub struct ConvexBody {
    shape: Shape,
    pose: AffineMap,
    pose_inv: AffineMap,
}

fn lp_norm(y: &Vector, p: f64) -> f64 {
    let m = y.amax();
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = y.iter().map(|v| (v.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `∇‖y‖_p`, which is also the maximizer of `⟨y, ·⟩` over `B_q`.
fn lp_norm_gradient(y: &Vector, p: f64) -> Vector {
    let norm = lp_norm(y, p);
    if norm == 0.0 {
        return Vector::zeros(y.len());
    }
    y.map(|v| v.signum() * (v.abs() / norm).powf(p - 1.0))
}

impl VPolytope {
    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn facets(&self) -> Result<&Facets> {
        self.facets
            .get_or_init(|| enumerate_facets(&self.vertices))
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// Largest ρ with 0 = Σ λⱼ wⱼ, Σ λⱼ = 1, λⱼ ≥ ρ. Positive iff the origin
    /// is interior (the hull is full-dimensional by construction).
    fn origin_depth(&self) -> f64 {
        *self.origin_depth.get_or_init(|| {
            let m = self.vertices.len();
            let n = self.vertices[0].len();
            // variables: λ (m, shifted by ρ so λ' = λ − ρ ≥ 0) and ρ (free).
            let mut obj = vec![0.0; m + 1];
            obj[m] = 1.0;
            let mut lp = LinearProgram::maximize(obj);
            lp.set_free(m);
            for i in 0..n {
                let mut row: Vec<f64> = self.vertices.iter().map(|w| w[i]).collect();
                row.push(self.vertices.iter().map(|w| w[i]).sum());
                lp.add(row, Relation::Eq, 0.0);
            }
            let mut row = vec![1.0; m];
            row.push(m as f64);
            lp.add(row, Relation::Eq, 1.0);
            match lp.solve().optimal() {
                Some((_, v)) => v,
                None => -1.0,
            }
        })
    }
}

impl HPolytope {
    pub fn normals(&self) -> &[Vector] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn vertices(&self) -> &[Vector] {
        self.vertices.get_or_init(|| enumerate_vertices(&self.normals, &self.offsets))
    }

    /// Chebyshev centre and radius.
    pub fn chebyshev(&self) -> &(Vector, f64) {
        self.chebyshev.get_or_init(|| {
            let n = self.normals[0].len();
            let mut obj = vec![0.0; n + 1];
            obj[n] = 1.0;
            let mut lp = LinearProgram::maximize(obj);
            for j in 0..n {
                lp.set_free(j);
            }
            for (a, c) in self.normals.iter().zip(&self.offsets) {
                let mut row: Vec<f64> = a.iter().copied().collect();
                row.push(a.norm());
                lp.add(row, Relation::Le, *c);
            }
            // Cap the radius so the LP stays bounded for unbounded inputs.
            let mut cap = vec![0.0; n + 1];
            cap[n] = 1.0;
            lp.add(cap, Relation::Le, 1e12);
            match lp.solve().optimal() {
                Some((x, r)) => (Vector::from_column_slice(&x[..n]), r),
                None => (Vector::zeros(n), -1.0),
            }
        })
    }

    fn support_lp(&self, f: &Vector) -> Result<(Vector, f64)> {
        let n = f.len();
        let mut lp = LinearProgram::maximize(f.iter().copied().collect());
        lp.set_all_free();
        for (a, c) in self.normals.iter().zip(&self.offsets) {
            lp.add(a.iter().copied().collect(), Relation::Le, *c);
        }
        match lp.solve() {
            crate::lp::LpOutcome::Optimal { x, value } => Ok((Vector::from_column_slice(&x[..n]), value)),
            crate::lp::LpOutcome::Unbounded => Err(Error::UnboundedBody),
            crate::lp::LpOutcome::Infeasible => Err(Error::DegenerateBody("empty H-polytope".into())),
        }
    }

    fn facets(&self) -> Facets {
        let mut normals = Vec::with_capacity(self.normals.len());
        let mut offsets = Vec::with_capacity(self.normals.len());
        for (a, c) in self.normals.iter().zip(&self.offsets) {
            let s = a.norm();
            normals.push(a / s);
            offsets.push(c / s);
        }
        Facets { normals, offsets }
    }
}

impl ConvexBody {
    // ---- construction ----------------------------------------------------

    fn from_shape(shape: Shape, n: usize) -> Self {
        Self { shape, pose: AffineMap::identity(n), pose_inv: AffineMap::identity(n) }
    }

    /// Convex hull of `points`; non-extreme points are dropped.
    pub fn vpolytope(points: Vec<Vector>) -> Result<Self> {
        let n = check_points(&points)?;
        if !affinely_spanning(&points, 1e-10) {
            return Err(Error::DegenerateBody("vertices do not affinely span the space".into()));
        }
        let vertices = reduce_to_extreme_points(&points);
        Ok(Self::vpolytope_unchecked(vertices, n))
    }

    fn vpolytope_unchecked(vertices: Vec<Vector>, n: usize) -> Self {
        Self::from_shape(
            Shape::VPolytope(VPolytope { vertices, facets: OnceLock::new(), origin_depth: OnceLock::new() }),
            n,
        )
    }

    /// `{x : ⟨nᵢ, x⟩ ≤ cᵢ}`, which must be bounded with nonempty interior.
    pub fn hpolytope(normals: Vec<Vector>, offsets: Vec<f64>) -> Result<Self> {
        let n = check_points(&normals)?;
        if offsets.len() != normals.len() {
            return Err(Error::DimensionMismatch { expected: normals.len(), got: offsets.len() });
        }
        if normals.iter().any(|a| a.norm() == 0.0) || offsets.iter().any(|c| !c.is_finite()) {
            return Err(Error::DegenerateBody("zero normal or non-finite offset".into()));
        }
        let h = HPolytope { normals, offsets, vertices: OnceLock::new(), chebyshev: OnceLock::new() };
        for k in 0..n {
            for s in [1.0, -1.0] {
                h.support_lp(&(unit(n, k) * s))?;
            }
        }
        let (_, r) = h.chebyshev();
        if *r <= 1e-12 {
            return Err(Error::DegenerateBody("H-polytope has empty interior".into()));
        }
        Ok(Self::from_shape(Shape::HPolytope(h), n))
    }

    pub fn lp_ball(n: usize, p: f64) -> Result<Self> {
        check_dim(n)?;
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::DomainError(format!("ℓ_p ball needs 1 < p < ∞, got {p}")));
        }
        Ok(Self::from_shape(Shape::LpBall { p }, n))
    }

    /// `{x : xᵀ Q x ≤ 1}` for symmetric positive-definite `Q`.
    pub fn ellipsoid(shape: Matrix) -> Result<Self> {
        let n = shape.nrows();
        check_dim(n)?;
        if shape.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: shape.ncols() });
        }
        let sym = (&shape - shape.transpose()).amax();
        if sym > 1e-12 * shape.amax().max(1.0) {
            return Err(Error::DegenerateBody("ellipsoid shape matrix is not symmetric".into()));
        }
        let Some(chol) = shape.clone().cholesky() else {
            return Err(Error::DegenerateBody("ellipsoid shape matrix is not positive definite".into()));
        };
        let inverse = chol.inverse();
        Ok(Self::from_shape(Shape::Ellipsoid { shape, inverse }, n))
    }

    pub fn euclidean_ball(n: usize) -> Self {
        Self::ellipsoid(Matrix::identity(n, n)).expect("identity is positive definite")
    }

    /// `[−1, 1]ⁿ` as a V-polytope.
    pub fn cube(n: usize) -> Self {
        let pts: Vec<Vector> = (0..1usize << n)
            .map(|s| Vector::from_fn(n, |i, _| if s >> i & 1 == 0 { 1.0 } else { -1.0 }))
            .collect();
        Self::vpolytope_unchecked(pts, n)
    }

    /// `conv{±eᵢ}`.
    pub fn cross_polytope(n: usize) -> Self {
        let pts: Vec<Vector> = (0..2 * n)
            .map(|k| unit(n, k / 2) * if k % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        Self::vpolytope_unchecked(pts, n)
    }

    /// Regular simplex inscribed in the unit sphere, centred at 0.
    pub fn regular_simplex(n: usize) -> Self {
        Self::vpolytope_unchecked(regular_simplex(n), n)
    }

    // ---- accessors -------------------------------------------------------

    pub fn dim(&self) -> usize {
        self.pose.dim()
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn pose(&self) -> &AffineMap {
        &self.pose
    }

    pub fn kind_name(&self) -> &'static str {
        match self.shape {
            Shape::VPolytope(_) => "vpolytope",
            Shape::HPolytope(_) => "hpolytope",
            Shape::LpBall { .. } => "lpball",
            Shape::Ellipsoid { .. } => "ellipsoid",
            Shape::Polar(_) => "polar",
        }
    }

    pub fn is_polytope(&self) -> bool {
        match &self.shape {
            Shape::VPolytope(_) | Shape::HPolytope(_) => true,
            Shape::Polar(inner) => inner.is_polytope(),
            _ => false,
        }
    }

    /// Every kind other than polytopes is centrally symmetric about its pose
    /// translation, except polars of translated bodies.
    pub fn is_centrally_symmetric_kind(&self) -> bool {
        matches!(self.shape, Shape::LpBall { .. } | Shape::Ellipsoid { .. })
    }

    /// Vertex list for polytopes.
    pub fn vertex_list(&self) -> Result<Vec<Vector>> {
        match &self.shape {
            Shape::VPolytope(v) => Ok(v.vertices.clone()),
            Shape::HPolytope(h) => Ok(h.vertices().to_vec()),
            _ => Err(Error::Unsupported(format!("{} has no vertex list", self.kind_name()))),
        }
    }

    /// Facets with unit normals for polytopes.
    pub fn facets(&self) -> Result<Facets> {
        match &self.shape {
            Shape::VPolytope(v) => v.facets().cloned(),
            Shape::HPolytope(h) => Ok(h.facets()),
            _ => Err(Error::Unsupported(format!("{} has no facet list", self.kind_name()))),
        }
    }

    /// A point in the interior.
    pub fn interior_point(&self) -> Vector {
        match &self.shape {
            Shape::VPolytope(v) => centroid(&v.vertices),
            Shape::HPolytope(h) => h.chebyshev().0.clone(),
            _ => self.pose.translation_part().clone(),
        }
    }

    pub fn origin_is_interior(&self) -> bool {
        match &self.shape {
            Shape::VPolytope(v) => v.origin_depth() > 1e-12,
            Shape::HPolytope(h) => h.offsets.iter().all(|&c| c > 0.0),
            _ => {
                let c = self.pose_inv.translation_part();
                self.base_gauge(c).map(|g| g < 1.0 - 1e-12).unwrap_or(false)
            }
        }
    }

    /// Radius of the largest Euclidean ball about 0 inside a polytope.
    pub fn origin_inradius(&self) -> Result<f64> {
        let f = self.facets()?;
        Ok(f.offsets.iter().cloned().fold(f64::INFINITY, f64::min))
    }

    // ---- base-frame evaluation for smooth kinds --------------------------

    fn base_gauge(&self, y: &Vector) -> Result<f64> {
        match &self.shape {
            Shape::LpBall { p } => Ok(lp_norm(y, *p)),
            Shape::Ellipsoid { shape, .. } => Ok(y.dot(&(shape * y)).max(0.0).sqrt()),
            Shape::Polar(inner) => inner.support(y),
            _ => unreachable!("polytopes are evaluated in world coordinates"),
        }
    }

    fn base_support(&self, f: &Vector) -> Result<f64> {
        match &self.shape {
            Shape::LpBall { p } => Ok(lp_norm(f, conjugate(*p))),
            Shape::Ellipsoid { inverse, .. } => Ok(f.dot(&(inverse * f)).max(0.0).sqrt()),
            Shape::Polar(inner) => inner.gauge(f),
            _ => unreachable!(),
        }
    }

    fn base_support_point(&self, f: &Vector) -> Result<Vector> {
        match &self.shape {
            Shape::LpBall { p } => Ok(lp_norm_gradient(f, conjugate(*p))),
            Shape::Ellipsoid { inverse, .. } => {
                let w = inverse * f;
                let s = f.dot(&w).sqrt();
                Ok(if s > 0.0 { w / s } else { Vector::zeros(f.len()) })
            }
            Shape::Polar(inner) => inner.gauge_gradient(f),
            _ => unreachable!(),
        }
    }

    fn base_gauge_gradient(&self, y: &Vector) -> Result<Vector> {
        match &self.shape {
            Shape::LpBall { p } => Ok(lp_norm_gradient(y, *p)),
            Shape::Ellipsoid { shape, .. } => {
                let w = shape * y;
                let g = y.dot(&w).sqrt();
                Ok(if g > 0.0 { w / g } else { Vector::zeros(y.len()) })
            }
            Shape::Polar(inner) => inner.support_point(y),
            _ => unreachable!(),
        }
    }

    // ---- kernel ----------------------------------------------------------

    /// Minkowski functional `inf{t > 0 : x ∈ tK}` about the origin.
    pub fn gauge(&self, x: &Vector) -> Result<f64> {
        self.check_len(x)?;
        match &self.shape {
            Shape::HPolytope(h) => {
                if !h.offsets.iter().all(|&c| c > 0.0) {
                    return Err(Error::OriginNotInterior);
                }
                let g = h
                    .normals
                    .iter()
                    .zip(&h.offsets)
                    .map(|(a, c)| a.dot(x) / c)
                    .fold(0.0f64, f64::max);
                Ok(g)
            }
            Shape::VPolytope(v) => {
                if v.origin_depth() <= 1e-12 {
                    return Err(Error::OriginNotInterior);
                }
                if x.amax() == 0.0 {
                    return Ok(0.0);
                }
                // min Σλ subject to Σ λⱼ wⱼ = x, λ ≥ 0.
                let m = v.vertices.len();
                let mut lp = LinearProgram::minimize(vec![1.0; m]);
                for i in 0..x.len() {
                    lp.add(v.vertices.iter().map(|w| w[i]).collect(), Relation::Eq, x[i]);
                }
                match lp.solve().optimal() {
                    Some((_, val)) => Ok(-val),
                    None => Err(Error::OriginNotInterior),
                }
            }
            _ => self.posed_gauge(x),
        }
    }

    /// Gauge of a posed smooth body: smallest t with g(y − t c) ≤ t where
    /// y = A⁻¹x and c = A⁻¹b.
    fn posed_gauge(&self, x: &Vector) -> Result<f64> {
        let y = self.pose_inv.apply_linear(x);
        let c = -self.pose_inv.translation_part();
        let gy = self.base_gauge(&y)?;
        if c.amax() == 0.0 {
            return Ok(gy);
        }
        let g0 = self.base_gauge(&(-&c))?;
        if g0 >= 1.0 - 1e-12 {
            return Err(Error::OriginNotInterior);
        }
        if gy == 0.0 {
            return Ok(0.0);
        }
        let h = |t: f64| -> Result<f64> { Ok(self.base_gauge(&(&y - &c * t))? - t) };
        // h is convex, h(0) = g(y) > 0 and h(t) ≤ g(y) − t(1 − g(−c)).
        let (mut a, mut fa) = (0.0, gy);
        let mut b = gy / (1.0 - g0);
        let mut fb = h(b)?;
        if fb >= 0.0 {
            return Ok(b);
        }
        let mut side = 0i8;
        for _ in 0..200 {
            let t = (a * fb - b * fa) / (fb - fa);
            let t = if t > a && t < b { t } else { 0.5 * (a + b) };
            let ft = h(t)?;
            if ft == 0.0 {
                return Ok(t);
            }
            if ft > 0.0 {
                a = t;
                fa = ft;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            } else {
                b = t;
                fb = ft;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            }
            if b - a <= 4.0 * f64::EPSILON * b {
                break;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// `sup_{y ∈ K} ⟨f, y⟩`.
    pub fn support(&self, f: &Vector) -> Result<f64> {
        self.check_len(f)?;
        match &self.shape {
            Shape::VPolytope(v) => Ok(v.vertices.iter().map(|w| w.dot(f)).fold(f64::NEG_INFINITY, f64::max)),
            Shape::HPolytope(h) => {
                if f.amax() == 0.0 {
                    return Ok(0.0);
                }
                Ok(h.support_lp(f)?.1)
            }
            _ => {
                let g = self.pose.linear().transpose() * f;
                Ok(self.base_support(&g)? + f.dot(self.pose.translation_part()))
            }
        }
    }

    /// A maximizer of `⟨f, ·⟩` over the body.
    pub fn support_point(&self, f: &Vector) -> Result<Vector> {
        self.check_len(f)?;
        match &self.shape {
            Shape::VPolytope(v) => Ok(v
                .vertices
                .iter()
                .max_by(|a, b| a.dot(f).partial_cmp(&b.dot(f)).unwrap())
                .cloned()
                .expect("nonempty vertex list")),
            Shape::HPolytope(h) => Ok(h.support_lp(f)?.0),
            _ => {
                let g = self.pose.linear().transpose() * f;
                Ok(self.pose.apply(&self.base_support_point(&g)?))
            }
        }
    }

    /// Gradient of the gauge at `x` (any subgradient for polytopes).
    pub fn gauge_gradient(&self, x: &Vector) -> Result<Vector> {
        let g = self.gauge(x)?;
        if g == 0.0 {
            return Ok(Vector::zeros(x.len()));
        }
        let b = x / g;
        let normals = self.normals_at(&b, 1e-9)?;
        let nv = normals.into_iter().next().ok_or(Error::NoContacts(1e-9))?;
        let d = nv.dot(&b);
        if d <= 0.0 {
            return Err(Error::OriginNotInterior);
        }
        Ok(nv / d)
    }

    /// Outward normals at a boundary point: all facets active within `tol`
    /// for polytopes (in facet order), the gradient direction for smooth kinds.
    pub fn normals_at(&self, x: &Vector, tol: f64) -> Result<Vec<Vector>> {
        self.check_len(x)?;
        match &self.shape {
            Shape::VPolytope(_) | Shape::HPolytope(_) => {
                let f = self.facets()?;
                let viol = f.max_violation(x);
                Ok(f.normals
                    .iter()
                    .zip(&f.offsets)
                    .filter(|(a, c)| a.dot(x) - *c >= viol - tol)
                    .map(|(a, _)| a.clone())
                    .collect())
            }
            _ => {
                let y = self.pose_inv.apply(x);
                let grad = self.base_gauge_gradient(&y)?;
                Ok(vec![self.pose_inv.linear().transpose() * grad])
            }
        }
    }

    /// Membership with slack `tol`, independent of where the origin lies.
    pub fn contains_point(&self, x: &Vector, tol: f64) -> Result<bool> {
        self.check_len(x)?;
        match &self.shape {
            Shape::HPolytope(h) => Ok(h.normals.iter().zip(&h.offsets).all(|(a, c)| a.dot(x) <= c + tol * a.norm())),
            Shape::VPolytope(_) => {
                let c = self.interior_point();
                Ok(self.shift(&c).gauge(&(x - &c))? <= 1.0 + tol)
            }
            _ => {
                let y = self.pose_inv.apply(x);
                Ok(self.base_gauge(&y)? <= 1.0 + tol)
            }
        }
    }

    // ---- transformations -------------------------------------------------

    /// Affine image `T(K)`.
    pub fn transform(&self, t: &AffineMap) -> Self {
        let n = self.dim();
        match &self.shape {
            Shape::VPolytope(v) => {
                let vertices: Vec<Vector> = v.vertices.iter().map(|w| t.apply(w)).collect();
                let facets = OnceLock::new();
                if let Some(Ok(f)) = v.facets.get() {
                    let _ = facets.set(Ok(transform_facets(f, t)));
                }
                Self::from_shape(
                    Shape::VPolytope(VPolytope { vertices, facets, origin_depth: OnceLock::new() }),
                    n,
                )
            }
            Shape::HPolytope(h) => {
                let nm = t.normal_map();
                let normals: Vec<Vector> = h.normals.iter().map(|a| &nm * a).collect();
                let offsets: Vec<f64> = normals
                    .iter()
                    .zip(&h.offsets)
                    .map(|(a, c)| c + a.dot(t.translation_part()))
                    .collect();
                let vertices = OnceLock::new();
                if let Some(vs) = h.vertices.get() {
                    let _ = vertices.set(vs.iter().map(|w| t.apply(w)).collect());
                }
                Self::from_shape(
                    Shape::HPolytope(HPolytope { normals, offsets, vertices, chebyshev: OnceLock::new() }),
                    n,
                )
            }
            Shape::Ellipsoid { shape, .. } => {
                // x = A(Lu + b) + c with uᵀQu ≤ 1: absorb the linear part.
                let full = t.compose(&self.pose);
                let inv_lin = full.linear().clone().try_inverse().expect("invertible pose");
                let q = inv_lin.transpose() * shape * &inv_lin;
                let q = (&q + q.transpose()) * 0.5;
                let inverse = {
                    let i = full.linear() * (self.shape_inverse()) * full.linear().transpose();
                    (&i + i.transpose()) * 0.5
                };
                let pose = AffineMap::translation(full.translation_part().clone());
                Self { shape: Shape::Ellipsoid { shape: q, inverse }, pose_inv: pose.inverse(), pose }
            }
            _ => {
                let pose = t.compose(&self.pose);
                Self { shape: self.shape.clone(), pose_inv: pose.inverse(), pose }
            }
        }
    }

    fn shape_inverse(&self) -> &Matrix {
        match &self.shape {
            Shape::Ellipsoid { inverse, .. } => inverse,
            _ => unreachable!(),
        }
    }

    /// `K − z`.
    pub fn shift(&self, z: &Vector) -> Self {
        self.transform(&AffineMap::translation(-z))
    }

    /// `λK` about the origin; negative λ reflects.
    pub fn scale(&self, factor: f64) -> Result<Self> {
        Ok(self.transform(&AffineMap::scaling(self.dim(), factor)?))
    }

    /// Polar body about the origin.
    pub fn polar(&self) -> Result<Self> {
        let n = self.dim();
        match &self.shape {
            Shape::VPolytope(v) => {
                let f = v.facets()?;
                if f.offsets.iter().cloned().fold(f64::INFINITY, f64::min) < POLAR_MIN_RADIUS {
                    return Err(Error::OriginNotInterior);
                }
                let k = v.vertices.len();
                let h = HPolytope {
                    normals: v.vertices.clone(),
                    offsets: vec![1.0; k],
                    vertices: OnceLock::new(),
                    chebyshev: OnceLock::new(),
                };
                // Vertices of the polar are the facet normals scaled by 1/offset.
                let _ = h.vertices.set(f.normals.iter().zip(&f.offsets).map(|(a, c)| a / *c).collect());
                Ok(Self::from_shape(Shape::HPolytope(h), n))
            }
            Shape::HPolytope(h) => {
                let radius = h
                    .normals
                    .iter()
                    .zip(&h.offsets)
                    .map(|(a, c)| c / a.norm())
                    .fold(f64::INFINITY, f64::min);
                if radius < POLAR_MIN_RADIUS {
                    return Err(Error::OriginNotInterior);
                }
                let pts: Vec<Vector> = h.normals.iter().zip(&h.offsets).map(|(a, c)| a / *c).collect();
                let vertices = reduce_to_extreme_points(&pts);
                Ok(Self::vpolytope_unchecked(vertices, n))
            }
            Shape::LpBall { p } if self.pose.is_linear() => {
                let base = Self::lp_ball(n, conjugate(*p))?;
                let nm = self.pose.normal_map();
                Ok(base.transform(&AffineMap::new(nm, Vector::zeros(n))?))
            }
            Shape::Ellipsoid { shape, inverse } if self.pose.is_linear() => Ok(Self::from_shape(
                Shape::Ellipsoid { shape: inverse.clone(), inverse: shape.clone() },
                n,
            )),
            Shape::Polar(inner) if self.pose.is_identity() => Ok((**inner).clone()),
            _ => {
                if !self.origin_is_interior() {
                    return Err(Error::OriginNotInterior);
                }
                Ok(Self::from_shape(Shape::Polar(Box::new(self.clone())), n))
            }
        }
    }

    fn check_len(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }
}

fn transform_facets(f: &Facets, t: &AffineMap) -> Facets {
    let nm = t.normal_map();
    let mut normals = Vec::with_capacity(f.len());
    let mut offsets = Vec::with_capacity(f.len());
    for (a, c) in f.normals.iter().zip(&f.offsets) {
        let na = &nm * a;
        let off = c + na.dot(t.translation_part());
        let s = na.norm();
        normals.push(na / s);
        offsets.push(off / s);
    }
    Facets { normals, offsets }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::DomainError(format!("dimension must be at least 2, got {n}")));
    }
    Ok(())
}

fn check_points(points: &[Vector]) -> Result<usize> {
    let first = points.first().ok_or_else(|| Error::DegenerateBody("empty point list".into()))?;
    let n = first.len();
    check_dim(n)?;
    if let Some(p) = points.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    if points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(Error::DegenerateBody("non-finite coordinate".into()));
    }
    Ok(n)
}

/// Used by callers that need a dense matrix of vertex coordinates.
pub fn vertex_matrix(points: &[Vector]) -> Matrix {
    let n = points[0].len();
    DMatrix::from_fn(n, points.len(), |i, j| points[j][i])
}

//! Properly convex open sets and their Hilbert geometry.
//!
//! Every backend works in the affine chart `{φ = 1}` given by a linear
//! functional `φ` that is positive on the domain. Points of `P(V)` are lifted
//! to that chart before any metric computation, so the sign normalisation of
//! [`ProjectivePoint`] never matters.

mod ellipsoid;
mod orbit_hull;
mod polytope;
mod shadow;

use serde::{Deserialize, Serialize};

pub use ellipsoid::Ellipsoid;
pub use orbit_hull::OrbitHull;
pub use polytope::{dual_polytope, Polyhedron};
pub use shadow::{ShadowSpec, ShadowVariant, DEFAULT_SHADOW_SAMPLES};

use crate::error::{GeomError, Result};
use crate::projective::{Matrix, ProjectiveMap, ProjectivePoint, Vector};

/// Chart-coordinate tolerance used by [`ConvexDomain::membership`].
pub const NEAR_BOUNDARY_TOL: f64 = 1e-10;

/// An affine chart `{φ = 1}` together with an affine frame for coordinates.
#[derive(Clone, Debug)]
pub struct Chart {
    functional: Vector,
    origin: Vector,
    basis: Matrix,
    dual: Matrix,
}

impl Chart {
    /// `origin` must satisfy `φ(origin) ≠ 0`; `basis` columns must span `ker φ`.
    pub fn new(functional: Vector, origin: &Vector, basis: Matrix) -> Result<Self> {
        let n = functional.len();
        if origin.len() != n || basis.nrows() != n || basis.ncols() + 1 != n {
            return Err(GeomError::DimensionMismatch { expected: n, got: origin.len() });
        }
        let phi_o = functional.dot(origin);
        if phi_o.abs() < 1e-12 {
            return Err(GeomError::InvalidDomain("chart origin on the hyperplane at infinity".into()));
        }
        let origin = origin / phi_o;
        for c in basis.column_iter() {
            if functional.dot(&c).abs() > 1e-9 * c.norm().max(1.0) {
                return Err(GeomError::InvalidDomain("chart frame leaves the chart hyperplane".into()));
            }
        }
        let gram = basis.transpose() * &basis;
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| GeomError::InvalidDomain("degenerate chart frame".into()))?;
        let dual = gram_inv * basis.transpose();
        Ok(Self { functional, origin, basis, dual })
    }

    /// Chart with an orthonormal frame of `ker φ` centred at `origin`.
    pub fn orthonormal(functional: Vector, origin: &Vector) -> Result<Self> {
        let basis = kernel_basis(&functional);
        Self::new(functional, origin, basis)
    }

    pub fn functional(&self) -> &Vector {
        &self.functional
    }

    pub fn dim(&self) -> usize {
        self.functional.len()
    }

    /// Representative of `v` with `φ = 1`.
    pub fn lift(&self, v: &Vector) -> Result<Vector> {
        let phi = self.functional.dot(v);
        if !(phi.abs() > 1e-300) || !phi.is_finite() {
            return Err(GeomError::NotInDomain { near_boundary: false });
        }
        Ok(v / phi)
    }

    /// Component of `v` tangent to the chart.
    pub fn tangent(&self, v: &Vector) -> Vector {
        let f = &self.functional;
        v - f * (f.dot(v) / f.norm_squared())
    }

    pub fn coords(&self, p: &ProjectivePoint) -> Result<Vec<f64>> {
        let x = self.lift(p.coords())?;
        Ok((&self.dual * (x - &self.origin)).iter().copied().collect())
    }

    pub fn point(&self, coords: &[f64]) -> Result<ProjectivePoint> {
        if coords.len() + 1 != self.dim() {
            return Err(GeomError::DimensionMismatch { expected: self.dim() - 1, got: coords.len() });
        }
        let v = &self.origin + &self.basis * Vector::from_column_slice(coords);
        ProjectivePoint::new(v)
    }
}

/// Orthonormal basis of the kernel of a functional, built from the standard
/// basis so that e.g. `φ = e₃` yields `e₁, e₂`.
pub(crate) fn kernel_basis(functional: &Vector) -> Matrix {
    let n = functional.len();
    let f = functional.normalize();
    let mut cols: Vec<Vector> = Vec::with_capacity(n - 1);
    let mut candidates: Vec<(usize, f64)> = (0..n).map(|i| (i, 1.0 - f[i] * f[i])).collect();
    // Prefer standard vectors that are nearly tangent, keep index order among ties.
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut chosen: Vec<usize> = candidates.iter().take(n - 1).map(|c| c.0).collect();
    chosen.sort_unstable();
    for i in chosen {
        let mut v = Vector::zeros(n);
        v[i] = 1.0;
        v -= &f * f[i];
        for c in &cols {
            let proj = c.dot(&v);
            v -= c * proj;
        }
        let norm = v.norm();
        cols.push(v / norm);
    }
    Matrix::from_columns(&cols)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Ellipsoid,
    Simplex,
    Polytope,
    OrbitHull,
}

#[derive(Clone, Debug)]
pub enum Backend {
    Ellipsoid(Ellipsoid),
    Polytope(Polyhedron),
    OrbitHull(OrbitHull),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Membership {
    pub inside: bool,
    pub near_boundary: bool,
}

/// A point of `∂Ω` with its regularity flags; `None` means unknown.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryPoint {
    pub point: ProjectivePoint,
    pub smooth: Option<bool>,
    pub extremal: Option<bool>,
    pub strongly_extremal: Option<bool>,
}

/// Simplicial distance between boundary points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplDistance {
    Finite(u32),
    Infinite,
    Unknown,
}

impl SplDistance {
    /// `Some(true)` if at least `k`, `None` when unknown.
    pub fn at_least(self, k: u32) -> Option<bool> {
        match self {
            SplDistance::Finite(d) => Some(d >= k),
            SplDistance::Infinite => Some(true),
            SplDistance::Unknown => None,
        }
    }
}

/// Face metric between boundary points: finite only inside a common open face.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceDistance {
    Finite(f64),
    Infinite,
    Unknown,
}

/// A properly convex open set with a chart in which it is bounded.
#[derive(Clone, Debug)]
pub struct ConvexDomain {
    backend: Backend,
    chart: Chart,
}

impl ConvexDomain {
    pub(crate) fn from_parts(backend: Backend, chart: Chart) -> Self {
        Self { backend, chart }
    }

    /// Ellipsoid `{B(x, x) < 0}` for a symmetric form with exactly one
    /// negative eigenvalue (the opposite sign convention is accepted too).
    pub fn ellipsoid(form: Matrix, chart: Option<Vector>) -> Result<Self> {
        let (ell, chart) = Ellipsoid::build(form, chart)?;
        Ok(Self { backend: Backend::Ellipsoid(ell), chart })
    }

    /// The projective disk `x² + y² < z²` in the chart `z = 1`.
    pub fn disk() -> Self {
        Self::ellipsoid(Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 1.0, -1.0])), None)
            .expect("unit disk is a valid ellipsoid")
    }

    /// Hyperbolic ball of dimension `d` (form `diag(1, …, 1, −1)`).
    pub fn hyperbolic_ball(d: usize) -> Self {
        let mut diag = vec![1.0; d + 1];
        diag[d] = -1.0;
        Self::ellipsoid(Matrix::from_diagonal(&Vector::from_vec(diag)), None)
            .expect("hyperbolic ball is a valid ellipsoid")
    }

    /// Open simplex with the given vertices (homogeneous coordinates).
    pub fn simplex(vertices: Vec<Vector>, chart: Option<Vector>) -> Result<Self> {
        let (poly, chart) = Polyhedron::simplex(vertices, chart)?;
        Ok(Self { backend: Backend::Polytope(poly), chart })
    }

    /// `{x : x_i > 0}` in `P(R^{d+1})`, charted by `Σ x_i = 1`.
    pub fn standard_simplex(d: usize) -> Self {
        let verts = (0..=d)
            .map(|i| {
                let mut v = Vector::zeros(d + 1);
                v[i] = 1.0;
                v
            })
            .collect();
        Self::simplex(verts, None).expect("standard simplex is valid")
    }

    /// Convex hull of the given vertices; facets are computed.
    pub fn polytope(vertices: Vec<Vector>, interior: Option<Vector>, chart: Option<Vector>) -> Result<Self> {
        let (poly, chart) = Polyhedron::from_vertices(vertices, interior, chart)?;
        Ok(Self { backend: Backend::Polytope(poly), chart })
    }

    /// Polygon with vertices given in the chart `z = 1`.
    pub fn polygon(chart_vertices: &[[f64; 2]]) -> Result<Self> {
        let verts = chart_vertices.iter().map(|v| Vector::from_vec(vec![v[0], v[1], 1.0])).collect();
        Self::polytope(verts, None, Some(Vector::from_vec(vec![0.0, 0.0, 1.0])))
    }

    /// Convex hull of a finite point cloud, typically an orbit ball.
    pub fn orbit_hull(points: Vec<Vector>, depth: usize, chart: Option<Vector>) -> Result<Self> {
        let (hull, chart) = OrbitHull::build(points, depth, chart)?;
        Ok(Self { backend: Backend::OrbitHull(hull), chart })
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn kind(&self) -> DomainKind {
        match &self.backend {
            Backend::Ellipsoid(_) => DomainKind::Ellipsoid,
            Backend::Polytope(p) if p.is_simplex() => DomainKind::Simplex,
            Backend::Polytope(_) => DomainKind::Polytope,
            Backend::OrbitHull(_) => DomainKind::OrbitHull,
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// Dimension of `V`.
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn as_ellipsoid(&self) -> Option<&Ellipsoid> {
        match &self.backend {
            Backend::Ellipsoid(e) => Some(e),
            _ => None,
        }
    }

    pub fn as_polyhedron(&self) -> Option<&Polyhedron> {
        match &self.backend {
            Backend::Polytope(p) => Some(p),
            _ => None,
        }
    }

    /// Point with the given chart coordinates.
    pub fn point(&self, coords: &[f64]) -> Result<ProjectivePoint> {
        self.chart.point(coords)
    }

    pub fn chart_coords(&self, p: &ProjectivePoint) -> Result<Vec<f64>> {
        self.chart.coords(p)
    }

    /// A designated interior point (centre of the ellipsoid, centroid otherwise).
    pub fn interior_point(&self) -> ProjectivePoint {
        let v = match &self.backend {
            Backend::Ellipsoid(e) => e.center().clone(),
            Backend::Polytope(p) => p.interior().clone(),
            Backend::OrbitHull(h) => h.center().clone(),
        };
        ProjectivePoint::new(v).expect("interior point is nonzero")
    }

    pub(crate) fn lift(&self, p: &ProjectivePoint) -> Result<Vector> {
        self.chart.lift(p.coords())
    }

    /// Signed chart distance to the boundary (positive inside).
    pub(crate) fn margin(&self, x: &Vector) -> f64 {
        match &self.backend {
            Backend::Ellipsoid(e) => e.margin(x, &self.chart),
            Backend::Polytope(p) => p.margin(x, &self.chart),
            Backend::OrbitHull(h) => h.margin(x),
        }
    }

    pub fn membership(&self, p: &ProjectivePoint) -> Membership {
        let Ok(x) = self.lift(p) else {
            return Membership { inside: false, near_boundary: false };
        };
        let m = self.margin(&x);
        Membership { inside: m > NEAR_BOUNDARY_TOL, near_boundary: m.abs() <= NEAR_BOUNDARY_TOL }
    }

    pub fn contains(&self, p: &ProjectivePoint) -> bool {
        self.membership(p).inside
    }

    fn require_inside(&self, p: &ProjectivePoint) -> Result<Vector> {
        let m = self.membership(p);
        if !m.inside {
            return Err(GeomError::NotInDomain { near_boundary: m.near_boundary });
        }
        self.lift(p)
    }

    /// Largest `s > 0` with `x + s·u` in the closure, for `x` inside in the chart
    /// and `u` tangent to the chart.
    pub(crate) fn exit_param(&self, x: &Vector, u: &Vector) -> Result<f64> {
        let s = match &self.backend {
            Backend::Ellipsoid(e) => e.exit_param(x, u),
            Backend::Polytope(p) => p.exit_param(x, u),
            Backend::OrbitHull(h) => h.exit_param(x, u),
        }?;
        if !(s.is_finite() && s > 0.0) {
            return Err(GeomError::InvalidDomain("domain unbounded in its chart".into()));
        }
        Ok(s)
    }

    /// Boundary point hit by the ray from `x` in the chart direction `dir`.
    pub fn exit_point(&self, x: &ProjectivePoint, dir: &Vector) -> Result<ProjectivePoint> {
        let xh = self.require_inside(x)?;
        let u = self.chart.tangent(dir);
        if u.norm() < 1e-14 {
            return Err(GeomError::DegenerateTuple("direction transverse to the chart"));
        }
        let s = self.exit_param(&xh, &u)?;
        ProjectivePoint::new(xh + u * s)
    }

    /// The boundary points `a, b` with `a, x, y, b` aligned in this order.
    pub fn ray_boundary(&self, x: &ProjectivePoint, y: &ProjectivePoint) -> Result<(ProjectivePoint, ProjectivePoint)> {
        let xh = self.require_inside(x)?;
        let yh = self.require_inside(y)?;
        let u = &yh - &xh;
        if u.norm() < 1e-15 {
            return Err(GeomError::DegenerateTuple("x = y"));
        }
        let sa = self.exit_param(&xh, &(-&u))?;
        let tb = self.exit_param(&yh, &u)?;
        Ok((ProjectivePoint::new(&xh - &u * sa)?, ProjectivePoint::new(&yh + &u * tb)?))
    }

    /// `½ log [a, x, y, b]` with `a, b` from [`ray_boundary`](Self::ray_boundary).
    pub fn hilbert_distance(&self, x: &ProjectivePoint, y: &ProjectivePoint) -> Result<f64> {
        let xh = self.require_inside(x)?;
        let yh = self.require_inside(y)?;
        Ok(self.distance_lifted(&xh, &yh)?)
    }

    /// Distance between chart lifts of interior points.
    pub(crate) fn distance_lifted(&self, xh: &Vector, yh: &Vector) -> Result<f64> {
        let u = yh - xh;
        if u.norm() <= 1e-15 * xh.norm() {
            return Ok(0.0);
        }
        // With x at parameter 0 and y at 1, [a,x,y,b] = (1 + 1/sa)(1 + 1/tb).
        let sa = self.exit_param(xh, &(-&u))?;
        let tb = self.exit_param(yh, &u)?;
        Ok(0.5 * ((1.0 / sa).ln_1p() + (1.0 / tb).ln_1p()))
    }

    /// `d(o, g·o)`, evaluated without forming `g·o` in the chart when the
    /// backend allows it. Stays accurate far beyond the chart's resolution.
    pub fn orbit_distance(&self, o: &ProjectivePoint, g: &ProjectiveMap) -> Result<f64> {
        match &self.backend {
            Backend::Ellipsoid(e) => {
                let ov = o.coords();
                let gv = g.apply_vec(ov);
                let c = e.cosh_orbit(ov, &gv);
                if c > 2.0 {
                    return Ok(c.acosh());
                }
                self.hilbert_distance(o, &ProjectivePoint::new(gv)?)
            }
            Backend::Polytope(p) if p.is_simplex() => {
                let ov = self.lift(o)?;
                let gv = g.apply_vec(&ov);
                p.simplex_distance_vec(&ov, &gv)
            }
            _ => self.hilbert_distance(o, &g.apply(o)),
        }
    }

    /// `d(g·o, x)` for an automorphism `g`, accurate when `g·o` is far out.
    /// On ellipsoids this uses `B(go, go) = B(o, o)`, valid for `|det g| = 1`.
    pub fn orbit_point_distance(&self, o: &ProjectivePoint, g: &ProjectiveMap, x: &ProjectivePoint) -> Result<f64> {
        match &self.backend {
            Backend::Ellipsoid(e) => {
                let ov = o.coords();
                let xv = x.coords();
                let gv = g.apply_vec(ov);
                let c = e.bilinear(&gv, xv).abs() / (e.bilinear(ov, ov) * e.bilinear(xv, xv)).abs().sqrt();
                if c.is_finite() && c > 2.0 {
                    return Ok(c.acosh());
                }
                self.hilbert_distance(&ProjectivePoint::new(gv)?, x)
            }
            Backend::Polytope(p) if p.is_simplex() => {
                let gv = g.apply_vec(&self.lift(o)?);
                p.simplex_distance_vec(&self.lift(x)?, &self.chart.lift(&gv)?)
            }
            _ => self.hilbert_distance(&g.apply(o), x),
        }
    }

    /// Point at Hilbert distance `t` from `x` along the chart direction `dir`.
    pub fn point_at_distance(&self, x: &ProjectivePoint, dir: &Vector, t: f64) -> Result<ProjectivePoint> {
        let xh = self.require_inside(x)?;
        let u = self.chart.tangent(dir);
        if u.norm() < 1e-14 {
            return Err(GeomError::DegenerateTuple("direction transverse to the chart"));
        }
        let sb = self.exit_param(&xh, &u)?;
        let sa = self.exit_param(&xh, &(-&u))?;
        let a = &xh - &u * sa;
        let b = &xh + &u * sb;
        let s0 = sa / (sa + sb);
        let (s, one_minus) = shift_logit(s0, sb / (sa + sb), t);
        ProjectivePoint::new(a * one_minus + b * s)
    }

    /// Supporting functionals active at a boundary point, oriented positive on
    /// the domain. `None` if the backend cannot provide them.
    pub fn supporting_functionals(&self, xi: &ProjectivePoint) -> Option<Vec<Vector>> {
        match &self.backend {
            Backend::Ellipsoid(e) => Some(vec![e.tangent_functional(xi.coords())]),
            Backend::Polytope(p) => {
                let xh = self.lift(xi).ok()?;
                let active = p.active_facets(&xh);
                if active.is_empty() {
                    None
                } else {
                    Some(active.into_iter().map(|i| p.facets()[i].clone()).collect())
                }
            }
            Backend::OrbitHull(_) => None,
        }
    }

    /// True when `p` lies on `∂Ω` up to `tol` in chart distance.
    pub fn on_boundary(&self, p: &ProjectivePoint, tol: f64) -> bool {
        match self.lift(p) {
            Ok(x) => self.margin(&x).abs() <= tol,
            Err(_) => false,
        }
    }

    pub fn boundary_classify(&self, xi: &ProjectivePoint) -> BoundaryPoint {
        let point = xi.clone();
        match &self.backend {
            Backend::Ellipsoid(_) => BoundaryPoint {
                point,
                smooth: Some(true),
                extremal: Some(true),
                strongly_extremal: Some(true),
            },
            Backend::Polytope(p) => {
                let flags = self.lift(xi).ok().map(|x| p.classify(&x));
                match flags {
                    Some((smooth, extremal, strongly)) => BoundaryPoint {
                        point,
                        smooth: Some(smooth),
                        extremal: Some(extremal),
                        strongly_extremal: Some(strongly),
                    },
                    None => BoundaryPoint { point, smooth: None, extremal: None, strongly_extremal: None },
                }
            }
            Backend::OrbitHull(_) => BoundaryPoint { point, smooth: None, extremal: None, strongly_extremal: None },
        }
    }

    pub fn simplicial_distance(&self, xi: &ProjectivePoint, eta: &ProjectivePoint) -> SplDistance {
        match &self.backend {
            Backend::Ellipsoid(_) => {
                if xi.approx_eq(eta, 1e-9) {
                    SplDistance::Finite(0)
                } else {
                    SplDistance::Infinite
                }
            }
            Backend::Polytope(p) => match (self.lift(xi), self.lift(eta)) {
                (Ok(x), Ok(y)) => p.simplicial_distance(&x, &y),
                _ => SplDistance::Unknown,
            },
            Backend::OrbitHull(_) => SplDistance::Unknown,
        }
    }

    /// Hilbert distance inside the common open face of two boundary points.
    pub fn face_distance(&self, xi: &ProjectivePoint, eta: &ProjectivePoint) -> FaceDistance {
        match &self.backend {
            Backend::Ellipsoid(_) => {
                if xi.approx_eq(eta, 1e-9) {
                    FaceDistance::Finite(0.0)
                } else {
                    FaceDistance::Infinite
                }
            }
            Backend::Polytope(p) => match (self.lift(xi), self.lift(eta)) {
                (Ok(x), Ok(y)) => p.face_distance(&x, &y),
                _ => FaceDistance::Unknown,
            },
            Backend::OrbitHull(_) => FaceDistance::Unknown,
        }
    }

    /// Checks that `g` maps sample points of `Ω` into `Ω`.
    pub fn preserves(&self, g: &ProjectiveMap, samples: &[ProjectivePoint]) -> bool {
        samples.iter().all(|p| !self.contains(p) || self.contains(&g.apply(p)))
    }

    /// Deterministic sample of interior points: the interior point and points
    /// at Hilbert distance `r` from it along the chart frame directions.
    pub fn sample_points(&self, r: f64) -> Vec<ProjectivePoint> {
        let o = self.interior_point();
        let mut out = vec![o.clone()];
        let n = self.dim();
        for j in 0..n - 1 {
            let dir: Vector = self.chart.basis.column(j).into();
            for sign in [1.0, -1.0] {
                if let Ok(p) = self.point_at_distance(&o, &(&dir * sign), r) {
                    out.push(p);
                }
            }
        }
        out
    }
}

/// Shift the logit `½ log(s/(1−s))` of a chord parameter by `t`, returning
/// `(s', 1 − s')` computed without cancellation.
pub(crate) fn shift_logit(s: f64, one_minus_s: f64, t: f64) -> (f64, f64) {
    let u = 0.5 * (s.ln() - one_minus_s.ln()) + t;
    // s' = 1/(1+e^{-2u}), 1-s' = 1/(1+e^{2u})
    let e = (-2.0 * u).exp();
    if e.is_finite() {
        let s_new = 1.0 / (1.0 + e);
        let om = if u > 0.0 { e / (1.0 + e) } else { 1.0 / (1.0 + (2.0 * u).exp()) };
        (s_new, om)
    } else {
        let f = (2.0 * u).exp();
        (f / (1.0 + f), 1.0 / (1.0 + f))
    }
}

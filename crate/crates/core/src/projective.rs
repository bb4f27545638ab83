//! Homogeneous coordinates, projective maps and their spectral data.
//!
//! Points of `P(V)` are stored as unit vectors whose first non-negligible
//! coordinate is positive, so that equal rays have equal coordinates. Maps are
//! stored together with their inverse and rescaled to `|det| = 1`; products of
//! such maps keep that normalization without recomputing a determinant, which
//! matters once entries grow like `e^{word length}`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative singular-value threshold for the rank-2 collinearity test.
pub const COLLINEARITY_TOL: f64 = 1e-9;
/// Relative gap `λ1/λ2 > 1 + PROXIMAL_GAP` required for proximality.
pub const PROXIMAL_GAP: f64 = 1e-8;
/// Imaginary part allowed on a top eigenvalue, relative to its modulus.
pub const REAL_EIGEN_TOL: f64 = 1e-10;

const SIGN_TOL: f64 = 1e-12;

fn canonical_coords(mut v: Vector) -> Option<Vector> {
    let norm = v.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return None;
    }
    v /= norm;
    if let Some(first) = v.iter().find(|c| c.abs() > SIGN_TOL) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
    Some(v)
}

/// A point of `P(V)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProjectivePoint {
    coords: Vector,
}

impl TryFrom<Vec<f64>> for ProjectivePoint {
    type Error = GeomError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(Vector::from_vec(v))
    }
}

impl From<ProjectivePoint> for Vec<f64> {
    fn from(p: ProjectivePoint) -> Self {
        p.coords.as_slice().to_vec()
    }
}

impl ProjectivePoint {
    pub fn new(coords: Vector) -> Result<Self> {
        canonical_coords(coords)
            .map(|coords| Self { coords })
            .ok_or(GeomError::DegenerateTuple("zero or non-finite coordinates"))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(Vector::from_column_slice(coords))
    }

    /// `e_i` in a space of dimension `dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Vector::zeros(dim);
        v[i] = 1.0;
        Self { coords: v }
    }

    pub fn coords(&self) -> &Vector {
        &self.coords
    }

    /// Dimension of the ambient vector space `V`.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Chordal distance between the rays, `min(|p - q|, |p + q|)`.
    pub fn chordal_distance(&self, other: &Self) -> f64 {
        let a = (&self.coords - &other.coords).norm();
        let b = (&self.coords + &other.coords).norm();
        a.min(b)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim() && self.chordal_distance(other) <= tol
    }
}

/// Smallest singular value of the stacked rows, relative to the largest.
fn relative_rank_defect(rows: &[&Vector]) -> f64 {
    let n = rows[0].len();
    let m = Matrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    let k = rows.len().min(n);
    let mut sorted: Vec<f64> = sv.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if k < 3 {
        return 0.0;
    }
    sorted[2] / max
}

/// True when `p` lies on the line `a ⊕ b` up to the rank tolerance.
pub fn is_collinear(a: &ProjectivePoint, b: &ProjectivePoint, p: &ProjectivePoint) -> bool {
    relative_rank_defect(&[a.coords(), b.coords(), p.coords()]) <= COLLINEARITY_TOL
}

/// Orthonormal frame of the plane spanned by `a` and `b`.
fn line_frame(a: &ProjectivePoint, b: &ProjectivePoint) -> Result<(Vector, Vector)> {
    let u1 = a.coords().clone();
    let mut u2 = b.coords() - &u1 * u1.dot(b.coords());
    let n = u2.norm();
    if n < 1e-12 {
        return Err(GeomError::DegenerateTuple("a = b"));
    }
    u2 /= n;
    Ok((u1, u2))
}

fn det2(p: (f64, f64), q: (f64, f64)) -> f64 {
    p.0 * q.1 - p.1 * q.0
}

/// Cross-ratio `[a, x, y, b]` of four collinear points, normalised so that
/// `[0, 1, t, ∞] = t`.
pub fn cross_ratio(
    a: &ProjectivePoint,
    x: &ProjectivePoint,
    y: &ProjectivePoint,
    b: &ProjectivePoint,
) -> Result<f64> {
    let defect = relative_rank_defect(&[a.coords(), b.coords(), x.coords()])
        .max(relative_rank_defect(&[a.coords(), b.coords(), y.coords()]));
    let (u1, u2) = line_frame(a, b)?;
    if defect > COLLINEARITY_TOL {
        return Err(GeomError::NotCollinear(defect));
    }
    let c = |p: &ProjectivePoint| (p.coords().dot(&u1), p.coords().dot(&u2));
    let (ca, cx, cy, cb) = (c(a), c(x), c(y), c(b));
    const EPS: f64 = 1e-14;
    let xa = det2(cx, ca);
    let by = det2(cb, cy);
    let ya = det2(cy, ca);
    let bx = det2(cb, cx);
    if xa.abs() < EPS || by.abs() < EPS || ya.abs() < EPS || bx.abs() < EPS {
        return Err(GeomError::DegenerateTuple("coincident points"));
    }
    Ok(ya * bx / (xa * by))
}

/// Affine coordinate `t` of `p` on the line `a ⊕ b`, with `p ∝ (1 - t) a + t b`
/// in the chart of the line that sends `a - b` to infinity.
pub fn collinear_param(a: &ProjectivePoint, b: &ProjectivePoint, p: &ProjectivePoint) -> Result<f64> {
    let (u1, u2) = line_frame(a, b)?;
    let proj = &u1 * u1.dot(p.coords()) + &u2 * u2.dot(p.coords());
    let residual = (p.coords() - proj).norm();
    if residual > 1e-9 {
        return Err(GeomError::OffLine(residual));
    }
    // Solve p = alpha a + beta b in the frame.
    let ca = (a.coords().dot(&u1), a.coords().dot(&u2));
    let cb = (b.coords().dot(&u1), b.coords().dot(&u2));
    let cp = (p.coords().dot(&u1), p.coords().dot(&u2));
    let det = det2(ca, cb);
    let alpha = det2(cp, cb) / det;
    let beta = det2(ca, cp) / det;
    let s = alpha + beta;
    if s.abs() < 1e-14 {
        return Err(GeomError::DegenerateTuple("point at infinity of the line chart"));
    }
    Ok(beta / s)
}

/// A projective transformation, stored with its inverse.
#[derive(Clone, Debug)]
pub struct ProjectiveMap {
    matrix: Matrix,
    inverse: Matrix,
    /// Sign of the determinant, tracked through products since it cannot be
    /// recomputed from far matrices.
    det_sign: f64,
    spectral: OnceLock<std::result::Result<SpectralClass, GeomError>>,
}

impl ProjectiveMap {
    /// Canonicalizes `matrix` to `|det| = 1`.
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(GeomError::DimensionMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::SingularMatrix);
        }
        let n = matrix.nrows();
        let det = matrix.clone().lu().determinant();
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        if !det.is_finite() || det.abs() <= 1e-12 * scale.powi(n as i32) {
            return Err(GeomError::SingularMatrix);
        }
        let inverse = matrix.clone().try_inverse().ok_or(GeomError::SingularMatrix)?;
        let s = det.abs().powf(1.0 / n as f64);
        Ok(Self::from_parts(matrix / s, inverse * s, det.signum()))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(GeomError::Empty("matrix rows"));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(GeomError::DimensionMismatch { expected: n, got: bad.len() });
        }
        Self::new(Matrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Builds a map from a `|det| = 1` matrix, its exact inverse and the sign
    /// of its determinant.
    pub(crate) fn from_parts(matrix: Matrix, inverse: Matrix, det_sign: f64) -> Self {
        Self { matrix, inverse, det_sign, spectral: OnceLock::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_parts(Matrix::identity(dim, dim), Matrix::identity(dim, dim), 1.0)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `±1`, the sign of `det` of the stored matrix.
    pub fn det_sign(&self) -> f64 {
        self.det_sign
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn inverse_matrix(&self) -> &Matrix {
        &self.inverse
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::from_parts(&self.matrix * &other.matrix, &other.inverse * &self.inverse, self.det_sign * other.det_sign)
    }

    pub fn inverse(&self) -> Self {
        Self::from_parts(self.inverse.clone(), self.matrix.clone(), self.det_sign)
    }

    pub fn apply(&self, p: &ProjectivePoint) -> ProjectivePoint {
        // An invertible matrix never sends a unit vector to zero.
        ProjectivePoint::new(&self.matrix * p.coords()).expect("invertible map")
    }

    /// Unnormalized image of a vector.
    pub fn apply_vec(&self, v: &Vector) -> Vector {
        &self.matrix * v
    }

    /// Matrix scaled to unit max-entry with a fixed sign, for comparisons mod scalars.
    pub fn normalized(&self) -> Matrix {
        let m = &self.matrix;
        let amax = m.amax();
        let mut out = m / amax;
        if let Some(first) = out.iter().find(|x| x.abs() > 1e-6) {
            if *first < 0.0 {
                out.neg_mut();
            }
        }
        out
    }

    /// Max-entry distance between normalized matrices.
    pub fn distance(&self, other: &Self) -> f64 {
        (self.normalized() - other.normalized()).amax()
    }

    pub fn spectral(&self) -> Result<&SpectralClass> {
        self.spectral
            .get_or_init(|| compute_spectral(&self.matrix, &self.inverse))
            .as_ref()
            .map_err(Clone::clone)
    }
}

/// Invariant subspace data attached to a biproximal map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Subspace {
    /// Columns span the subspace.
    pub basis: Vec<Vec<f64>>,
}

/// Spectral classification of a projective map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralClass {
    pub eigen_moduli: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub ell: f64,
    pub kappa: f64,
    pub proximal: bool,
    pub biproximal: bool,
    pub x_plus: Option<ProjectivePoint>,
    pub x_minus: Option<ProjectivePoint>,
    pub x_zero: Option<Subspace>,
}

struct TopEigen {
    moduli: Vec<f64>,
    top: nalgebra::Complex<f64>,
    proximal: bool,
}

fn top_eigen(m: &Matrix) -> Result<TopEigen> {
    let scale = m.amax();
    let scaled = m / scale;
    // Nearly scalar matrices with rounding noise can stall at the tightest tolerance.
    let schur = [1e-15, 1e-13, 1e-11]
        .iter()
        .find_map(|&eps| scaled.clone().try_schur(eps, 10_000))
        .ok_or_else(|| GeomError::SpectralFailure("Schur iteration did not converge".into()))?;
    let mut eig: Vec<nalgebra::Complex<f64>> =
        schur.complex_eigenvalues().iter().map(|z| z * scale).collect();
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(GeomError::SpectralFailure("non-finite eigenvalue".into()));
    }
    eig.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    let top = eig[0];
    let gap_ok = moduli.len() == 1 || moduli[0] > moduli[1] * (1.0 + PROXIMAL_GAP);
    let real_ok = top.im.abs() <= REAL_EIGEN_TOL * moduli[0];
    Ok(TopEigen { moduli, top, proximal: gap_ok && real_ok })
}

/// Unit null vector of `m - λ I`, via the smallest right singular vector.
fn eigenline(m: &Matrix, lambda: f64) -> Result<ProjectivePoint> {
    let n = m.nrows();
    let scale = m.amax();
    let shifted = (m - Matrix::identity(n, n) * lambda) / scale;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| GeomError::SpectralFailure("svd".into()))?;
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    ProjectivePoint::new(v_t.row(imin).transpose())
}

fn compute_spectral(m: &Matrix, inv: &Matrix) -> std::result::Result<SpectralClass, GeomError> {
    let n = m.nrows();
    let fwd = top_eigen(m)?;
    let bwd = top_eigen(inv)?;
    let mut eigen_moduli = fwd.moduli.clone();
    // The smallest modulus is more accurate as the inverse of the inverse's largest.
    eigen_moduli[n - 1] = 1.0 / bwd.moduli[0];

    let sv_m = m.singular_values();
    let sv_inv = inv.singular_values();
    let mut singular_values: Vec<f64> = sv_m.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let mu_max_inv = sv_inv.max();
    singular_values[n - 1] = 1.0 / mu_max_inv;

    let ell = 0.5 * (fwd.moduli[0] * bwd.moduli[0]).ln();
    let kappa = 0.5 * (singular_values[0] * mu_max_inv).ln();
    let ell = ell.max(0.0);
    let kappa = kappa.max(ell);

    let x_plus = if fwd.proximal { Some(eigenline(m, fwd.top.re)?) } else { None };
    let x_minus = if bwd.proximal { Some(eigenline(inv, bwd.top.re)?) } else { None };
    let biproximal = fwd.proximal && bwd.proximal;

    let x_zero = if biproximal && n > 2 {
        // Image of (g - λ1)(g - λn) is the invariant complement of the axis.
        let id = Matrix::identity(n, n);
        let scale = m.amax();
        let a = (m - &id * fwd.top.re) / scale;
        let b = (m - &id * (1.0 / bwd.top.re)) / scale;
        let svd = (a * b).svd(true, false);
        svd.u.map(|u| Subspace {
            basis: (0..n - 2).map(|j| u.column(j).iter().copied().collect()).collect(),
        })
    } else {
        None
    };

    Ok(SpectralClass {
        eigen_moduli,
        singular_values,
        ell,
        kappa,
        proximal: fwd.proximal,
        biproximal,
        x_plus,
        x_minus,
        x_zero,
    })
}

/// Full spectral classification of `g`.
pub fn classify_map(g: &ProjectiveMap) -> Result<SpectralClass> {
    g.spectral().cloned()
}

/// `½ log(λ1/λ_{d+1})`.
pub fn translation_length(g: &ProjectiveMap) -> Result<f64> {
    Ok(g.spectral()?.ell)
}

pub fn apply(g: &ProjectiveMap, p: &ProjectivePoint) -> ProjectivePoint {
    g.apply(p)
}

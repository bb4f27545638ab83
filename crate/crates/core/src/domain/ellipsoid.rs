use nalgebra::SymmetricEigen;

use super::{kernel_basis, Chart};
use crate::error::{GeomError, Result};
use crate::projective::{Matrix, Vector};

/// `{B(x, x) < 0}` for a form of signature `(d, 1)`.
#[derive(Clone, Debug)]
pub struct Ellipsoid {
    form: Matrix,
    center: Vector,
}

impl Ellipsoid {
    pub(crate) fn build(form: Matrix, chart: Option<Vector>) -> Result<(Self, Chart)> {
        if !form.is_square() {
            return Err(GeomError::InvalidDomain("form is not square".into()));
        }
        let n = form.nrows();
        if n < 2 {
            return Err(GeomError::InvalidDomain("dimension too small".into()));
        }
        let asym = (&form - form.transpose()).amax();
        if asym > 1e-10 * form.amax() {
            return Err(GeomError::InvalidDomain("form is not symmetric".into()));
        }
        let mut form = (&form + form.transpose()) * 0.5;
        let eig = SymmetricEigen::new(form.clone());
        let scale = eig.eigenvalues.amax();
        let tol = 1e-12 * scale;
        let neg = eig.eigenvalues.iter().filter(|&&l| l < -tol).count();
        let pos = eig.eigenvalues.iter().filter(|&&l| l > tol).count();
        if neg + pos != n {
            return Err(GeomError::InvalidDomain("degenerate quadratic form".into()));
        }
        let flip = match (neg, pos) {
            (1, _) => false,
            (_, 1) => true,
            _ => return Err(GeomError::InvalidDomain("form must have signature (d, 1)".into())),
        };
        let eigenvalues = if flip { -&eig.eigenvalues } else { eig.eigenvalues.clone() };
        if flip {
            form = -form;
        }
        let (imin, _) = eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("n >= 2");
        let mut axis: Vector = eig.eigenvectors.column(imin).into();
        let functional = match chart {
            Some(f) => {
                if f.len() != n {
                    return Err(GeomError::DimensionMismatch { expected: n, got: f.len() });
                }
                f
            }
            None => {
                if let Some(first) = axis.iter().find(|c| c.abs() > 1e-12) {
                    if *first < 0.0 {
                        axis = -axis;
                    }
                }
                // Prefer a clean standard functional when the axis is a basis vector.
                axis.map(|c| if c.abs() < 1e-14 { 0.0 } else { c })
            }
        };
        // The chart hyperplane must miss the closed cone: B positive definite on ker φ.
        let k = kernel_basis(&functional);
        let restricted = k.transpose() * &form * &k;
        let r_eig = SymmetricEigen::new(restricted);
        if r_eig.eigenvalues.iter().any(|&l| l <= tol) {
            return Err(GeomError::InvalidDomain("ellipsoid is not bounded in the chart".into()));
        }
        // Centre: B-orthogonal complement of ker φ, i.e. B⁻¹ φ.
        let inv = form.clone().try_inverse().ok_or(GeomError::SingularMatrix)?;
        let c = &inv * &functional;
        let phi_c = functional.dot(&c);
        let center = c / phi_c;
        if (center.transpose() * &form * &center)[(0, 0)] >= 0.0 {
            return Err(GeomError::InvalidDomain("chart centre outside the cone".into()));
        }
        let chart = Chart::new(functional, &center, k)?;
        Ok((Self { form, center }, chart))
    }

    pub fn form(&self) -> &Matrix {
        &self.form
    }

    /// Centre in the chart (`φ = 1`).
    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn bilinear(&self, x: &Vector, y: &Vector) -> f64 {
        x.dot(&(&self.form * y))
    }

    pub(crate) fn margin(&self, x: &Vector, chart: &Chart) -> f64 {
        let q = self.bilinear(x, x);
        let grad = chart.tangent(&(&self.form * x));
        let g = grad.norm().max(1e-300);
        -q / (2.0 * g)
    }

    pub(crate) fn exit_param(&self, x: &Vector, u: &Vector) -> Result<f64> {
        let bu = &self.form * u;
        let alpha = u.dot(&bu);
        let beta = x.dot(&bu);
        let gamma = self.bilinear(x, x);
        if alpha <= 0.0 {
            return Err(GeomError::InvalidDomain("direction not bounded by the ellipsoid".into()));
        }
        if gamma >= 0.0 {
            return Err(GeomError::NotInDomain { near_boundary: gamma.abs() < 1e-12 });
        }
        let disc = (beta * beta - alpha * gamma).sqrt();
        Ok(if beta > 0.0 { -gamma / (beta + disc) } else { (disc - beta) / alpha })
    }

    /// `cosh d(x, y)` for vectors with `B(y, y) = B(x, x)` by construction (`y = g x`
    /// with `g` an automorphism of determinant ±1).
    pub(crate) fn cosh_orbit(&self, x: &Vector, y: &Vector) -> f64 {
        (self.bilinear(x, y) / self.bilinear(x, x)).abs()
    }

    /// Supporting functional `−B(ξ, ·)` at a boundary point, positive inside.
    pub(crate) fn tangent_functional(&self, xi: &Vector) -> Vector {
        let mut f = -(&self.form * xi);
        if f.dot(&self.center) < 0.0 {
            f = -f;
        }
        f
    }

    /// Hilbert distance from `y` to the segment `[a, b]` (`b` possibly on the
    /// boundary), with `B(y, y) = yy` supplied by the caller.
    pub(crate) fn distance_to_segment_vec(&self, a: &Vector, b: &Vector, y: &Vector, yy: f64) -> f64 {
        // Orient all vectors into the same nappe as the centre.
        let orient = |v: &Vector| if self.bilinear(v, &self.center) > 0.0 { -v } else { v.clone() };
        let (a, b, y) = (orient(a), orient(b), orient(y));
        let g11 = self.bilinear(&a, &a);
        let g12 = self.bilinear(&a, &b);
        let g22 = self.bilinear(&b, &b);
        let ra = self.bilinear(&a, &y);
        let rb = self.bilinear(&b, &y);
        let det = g11 * g22 - g12 * g12;
        let ca = (g22 * ra - g12 * rb) / det;
        let cb = (g11 * rb - g12 * ra) / det;
        let cosh_to = |v: &Vector, vv: f64| {
            let c = (self.bilinear(v, &y) / (vv * yy).sqrt()).abs();
            c.max(1.0).acosh()
        };
        if ca >= 0.0 && cb >= 0.0 {
            // Projection lands on the segment: cosh² d = B(y_W, y_W)/B(y, y).
            let ww = ca * ra + cb * rb;
            let ratio = ww / yy;
            return ratio.max(1.0).sqrt().acosh();
        }
        if cb < 0.0 {
            // Foot beyond a.
            return cosh_to(&a, g11);
        }
        // Foot beyond b, which must then be interior.
        if g22 >= 0.0 {
            return f64::INFINITY;
        }
        cosh_to(&b, g22)
    }
}

//! Geodesic flow, Busemann functions, Gromov products and Hopf coordinates.
//!
//! A unit tangent vector is stored as the chord `(ξ⁻, ξ⁺)` plus a footpoint;
//! the flow moves the footpoint along the chord in closed form. Busemann
//! functions at boundary points with supporting-hyperplane data (ellipsoids,
//! polytopes) are evaluated through their exact limit along the ray, see
//! [`busemann_detailed`]; other backends fall back to ray sampling.

use serde::Serialize;

use crate::domain::{shift_logit, ConvexDomain, NEAR_BOUNDARY_TOL};
use crate::error::{GeomError, Result};
use crate::projective::{ProjectiveMap, ProjectivePoint, Vector};

/// Relative distance from `∂Ω` accepted for a boundary point argument.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Sampling depths for the ray-sampling Busemann fallback.
const SAMPLE_DEPTHS: [f64; 3] = [4.0, 6.0, 8.0];
const SAMPLE_SPREAD_TOL: f64 = 1e-6;

/// A point of `T¹Ω`: the oriented chord `(ξ⁻, ξ⁺)` and a footpoint on it.
#[derive(Clone, Debug, Serialize)]
pub struct UnitTangent {
    pub xi_minus: ProjectivePoint,
    pub xi_plus: ProjectivePoint,
    pub foot: ProjectivePoint,
}

/// Hopf coordinates `(ξ, η, t)` based at `o`.
#[derive(Clone, Debug, Serialize)]
pub struct HopfCoord {
    pub o: ProjectivePoint,
    pub xi: ProjectivePoint,
    pub eta: ProjectivePoint,
    pub t: f64,
}

/// A Busemann value with a flag raised when `ξ` has several supporting
/// hyperplanes, in which case the along-ray limit is not canonical.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BusemannValue {
    pub value: f64,
    pub ambiguous: bool,
}

impl UnitTangent {
    /// Checks collinearity and that the foot lies in `Ω`.
    pub fn new(
        domain: &ConvexDomain,
        xi_minus: ProjectivePoint,
        xi_plus: ProjectivePoint,
        foot: ProjectivePoint,
    ) -> Result<Self> {
        if xi_minus.approx_eq(&xi_plus, 1e-12) {
            return Err(GeomError::DegenerateTuple("ξ⁻ = ξ⁺"));
        }
        if !domain.contains(&foot) {
            return Err(GeomError::NotInDomain { near_boundary: domain.membership(&foot).near_boundary });
        }
        if !crate::projective::is_collinear(&xi_minus, &xi_plus, &foot) {
            return Err(GeomError::NotCollinear(f64::NAN));
        }
        Ok(Self { xi_minus, xi_plus, foot })
    }

    /// Tangent at `x` pointing towards `y`.
    pub fn from_points(domain: &ConvexDomain, x: &ProjectivePoint, y: &ProjectivePoint) -> Result<Self> {
        let (a, b) = domain.ray_boundary(x, y)?;
        Ok(Self { xi_minus: a, xi_plus: b, foot: x.clone() })
    }

    /// Tangent at `x` pointing along the chart direction `dir`.
    pub fn from_direction(domain: &ConvexDomain, x: &ProjectivePoint, dir: &Vector) -> Result<Self> {
        let b = domain.exit_point(x, dir)?;
        let a = domain.exit_point(x, &(-dir))?;
        Ok(Self { xi_minus: a, xi_plus: b, foot: x.clone() })
    }

    /// `−v`: endpoints swapped, same foot.
    pub fn flip(&self) -> Self {
        Self { xi_minus: self.xi_plus.clone(), xi_plus: self.xi_minus.clone(), foot: self.foot.clone() }
    }

    /// Image under an automorphism.
    pub fn transform(&self, g: &ProjectiveMap) -> Self {
        Self { xi_minus: g.apply(&self.xi_minus), xi_plus: g.apply(&self.xi_plus), foot: g.apply(&self.foot) }
    }
}

/// Chart lifts of the chord endpoints and the foot parameter `(s, 1 − s)`.
fn chord(domain: &ConvexDomain, v: &UnitTangent) -> Result<(Vector, Vector, f64, f64)> {
    let a = domain.lift(&v.xi_minus)?;
    let b = domain.lift(&v.xi_plus)?;
    let p = domain.lift(&v.foot)?;
    let ab = &b - &a;
    let n2 = ab.norm_squared();
    let s = (&p - &a).dot(&ab) / n2;
    let om = (&b - &p).dot(&ab) / n2;
    if !(s > 0.0 && om > 0.0) {
        return Err(GeomError::NotInDomain { near_boundary: true });
    }
    Ok((a, b, s, om))
}

/// `φ_t v`.
pub fn geodesic_flow(domain: &ConvexDomain, v: &UnitTangent, t: f64) -> Result<UnitTangent> {
    if t == 0.0 {
        return Ok(v.clone());
    }
    let (a, b, s, om) = chord(domain, v)?;
    let (s2, om2) = shift_logit(s, om, t);
    let foot = ProjectivePoint::new(a * om2 + b * s2)?;
    Ok(UnitTangent { xi_minus: v.xi_minus.clone(), xi_plus: v.xi_plus.clone(), foot })
}

/// Chart coordinates of the foot of `φ_t v` for each `t`.
pub fn flow_trajectory(domain: &ConvexDomain, v: &UnitTangent, times: &[f64]) -> Result<Vec<(f64, Vec<f64>)>> {
    times
        .iter()
        .map(|&t| {
            let w = geodesic_flow(domain, v, t)?;
            Ok((t, domain.chart_coords(&w.foot)?))
        })
        .collect()
}

/// Boundary point of `Ω` nearest to `ξ` along the ray from the interior point.
fn snap_to_boundary(domain: &ConvexDomain, xi: &ProjectivePoint) -> Result<Vector> {
    let xh = domain.lift(xi)?;
    let o = domain.lift(&domain.interior_point())?;
    let u = &xh - &o;
    let s = domain.exit_param(&o, &u)?;
    if (s - 1.0).abs() > BOUNDARY_TOL {
        return Err(GeomError::Precondition(format!(
            "point is not on the boundary (ray parameter {s:.3e})"
        )));
    }
    Ok(o + u * s)
}

/// `b_ξ(x, y) = lim_{z→ξ} d(x, z) − d(y, z)`.
pub fn busemann(domain: &ConvexDomain, xi: &ProjectivePoint, x: &ProjectivePoint, y: &ProjectivePoint) -> Result<f64> {
    busemann_detailed(domain, xi, x, y).map(|b| b.value)
}

/// Busemann function with the smoothness flag.
///
/// With `η_p` the second boundary point of the line `ξ ⊕ p` and `f_k` the
/// supporting functionals active at `ξ`,
/// `b_ξ(x, y) = ½ log(|η_x ξ|/|η_x x|) − ½ log(|η_y ξ|/|η_y y|) + ½ log max_k f_k(x)/f_k(y)`,
/// chart lengths throughout. This is the exact limit of `d(x, z) − d(y, z)`
/// along `[y, ξ)` for ellipsoids and polytopes.
pub fn busemann_detailed(
    domain: &ConvexDomain,
    xi: &ProjectivePoint,
    x: &ProjectivePoint,
    y: &ProjectivePoint,
) -> Result<BusemannValue> {
    let xh = require_interior(domain, x)?;
    let yh = require_interior(domain, y)?;
    let Some(functionals) = domain.supporting_functionals(xi) else {
        return busemann_sampled(domain, xi, x, y);
    };
    let xih = snap_to_boundary(domain, xi)?;
    if (&xh - &yh).amax() <= 1e-15 {
        return Ok(BusemannValue { value: 0.0, ambiguous: functionals.len() > 1 });
    }
    let far_side = |p: &Vector| -> Result<f64> {
        let s = domain.exit_param(p, &(p - &xih))?;
        Ok(0.5 * (1.0 / s).ln_1p())
    };
    let ratio = functionals
        .iter()
        .map(|f| f.dot(&xh) / f.dot(&yh))
        .fold(f64::MIN, f64::max);
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(GeomError::BusemannDivergent(f64::NAN));
    }
    let value = far_side(&xh)? - far_side(&yh)? + 0.5 * ratio.ln();
    Ok(BusemannValue { value, ambiguous: functionals.len() > 1 })
}

/// Ray sampling at increasing depths with Aitken extrapolation.
fn busemann_sampled(
    domain: &ConvexDomain,
    xi: &ProjectivePoint,
    x: &ProjectivePoint,
    y: &ProjectivePoint,
) -> Result<BusemannValue> {
    let yh = domain.lift(y)?;
    let xih = domain.lift(xi)?;
    let dir = &xih - &yh;
    let vals = SAMPLE_DEPTHS
        .iter()
        .map(|&depth| {
            let z = domain.point_at_distance(y, &dir, depth)?;
            Ok(domain.hilbert_distance(x, &z)? - depth)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (f1, f2, f3) = (vals[0], vals[1], vals[2]);
    let d1 = f2 - f1;
    let d2 = f3 - f2;
    let extrapolated = if (d1 - d2).abs() > 1e-15 && d2.abs() < d1.abs() {
        f3 - d2 * d2 / (d2 - d1)
    } else {
        f3
    };
    let spread = (extrapolated - f3).abs();
    if spread > SAMPLE_SPREAD_TOL {
        return Err(GeomError::BusemannDivergent(spread));
    }
    Ok(BusemannValue { value: extrapolated, ambiguous: false })
}

fn require_interior(domain: &ConvexDomain, p: &ProjectivePoint) -> Result<Vector> {
    let m = domain.membership(p);
    if !m.inside {
        return Err(GeomError::NotInDomain { near_boundary: m.near_boundary });
    }
    domain.lift(p)
}

/// A point of the open chord `(ξ, η)`, or an error if the chord misses `Ω`.
pub fn chord_point(domain: &ConvexDomain, xi: &ProjectivePoint, eta: &ProjectivePoint) -> Result<ProjectivePoint> {
    let a = domain.lift(xi)?;
    let b = domain.lift(eta)?;
    if (&a - &b).amax() < 1e-12 {
        return Err(GeomError::NotGeodesicPair);
    }
    let m = (a + b) * 0.5;
    if domain.margin(&m) <= NEAR_BOUNDARY_TOL {
        return Err(GeomError::NotGeodesicPair);
    }
    ProjectivePoint::new(m)
}

/// True when the open segment `(ξ, η)` meets `Ω`.
pub fn is_geodesic_pair(domain: &ConvexDomain, xi: &ProjectivePoint, eta: &ProjectivePoint) -> bool {
    chord_point(domain, xi, eta).is_ok()
}

/// `⟨ξ, η⟩_x = ½ (b_ξ(x, y) + b_η(x, y))` for `y` on the chord `(ξ, η)`.
pub fn gromov_product(
    domain: &ConvexDomain,
    xi: &ProjectivePoint,
    eta: &ProjectivePoint,
    x: &ProjectivePoint,
) -> Result<f64> {
    let y = chord_point(domain, xi, eta)?;
    gromov_product_via(domain, xi, eta, x, &y)
}

/// Gromov product evaluated with a caller-chosen chord point `y`.
pub fn gromov_product_via(
    domain: &ConvexDomain,
    xi: &ProjectivePoint,
    eta: &ProjectivePoint,
    x: &ProjectivePoint,
    y: &ProjectivePoint,
) -> Result<f64> {
    Ok(0.5 * (busemann(domain, xi, x, y)? + busemann(domain, eta, x, y)?))
}

/// `Hopf_o(ξ, η, t)`: tangent to `ξ ⊕ η` pointing to `η`, with `b_η(o, foot) = t`.
pub fn hopf(
    domain: &ConvexDomain,
    o: &ProjectivePoint,
    xi: &ProjectivePoint,
    eta: &ProjectivePoint,
    t: f64,
) -> Result<UnitTangent> {
    let p0 = chord_point(domain, xi, eta)?;
    let v0 = UnitTangent { xi_minus: xi.clone(), xi_plus: eta.clone(), foot: p0 };
    // b_η(o, φ_s p0) = b_η(o, p0) + s, so the foot is reached in one step.
    let t0 = busemann(domain, eta, o, &v0.foot)?;
    geodesic_flow(domain, &v0, t - t0)
}

pub fn hopf_coords(domain: &ConvexDomain, o: &ProjectivePoint, v: &UnitTangent) -> Result<HopfCoord> {
    Ok(HopfCoord {
        o: o.clone(),
        xi: v.xi_minus.clone(),
        eta: v.xi_plus.clone(),
        t: busemann(domain, &v.xi_plus, o, &v.foot)?,
    })
}

/// `ρ_{ξ,η}(η') = 2⟨ξ, η'⟩_o − 2⟨ξ, η⟩_o`.
pub fn rho(
    domain: &ConvexDomain,
    o: &ProjectivePoint,
    xi: &ProjectivePoint,
    eta: &ProjectivePoint,
    eta2: &ProjectivePoint,
) -> Result<f64> {
    Ok(2.0 * gromov_product(domain, xi, eta2, o)? - 2.0 * gromov_product(domain, xi, eta, o)?)
}

/// Boundary cross-ratio `B(ξ, ξ', η, η') = ρ_{ξ,η}(η') + ρ_{ξ',η'}(η)`, based at
/// the domain's interior point.
#[allow(non_snake_case)]
pub fn cross_ratio_B(
    domain: &ConvexDomain,
    xi: &ProjectivePoint,
    xi2: &ProjectivePoint,
    eta: &ProjectivePoint,
    eta2: &ProjectivePoint,
) -> Result<f64> {
    let o = domain.interior_point();
    cross_ratio_B_at(domain, &o, xi, xi2, eta, eta2)
}

#[allow(non_snake_case)]
pub fn cross_ratio_B_at(
    domain: &ConvexDomain,
    o: &ProjectivePoint,
    xi: &ProjectivePoint,
    xi2: &ProjectivePoint,
    eta: &ProjectivePoint,
    eta2: &ProjectivePoint,
) -> Result<f64> {
    Ok(rho(domain, o, xi, eta, eta2)? + rho(domain, o, xi2, eta2, eta)?)
}

/// `B(x_g⁺, x_g⁻, ξ, gξ)`, which equals `2ℓ(g)`.
pub fn period_check(domain: &ConvexDomain, g: &ProjectiveMap, xi: &ProjectivePoint) -> Result<f64> {
    let spec = g.spectral()?;
    let (Some(xp), Some(xm)) = (spec.x_plus.as_ref(), spec.x_minus.as_ref()) else {
        return Err(GeomError::Precondition("element is not biproximal".into()));
    };
    if !is_geodesic_pair(domain, xp, xm) {
        return Err(GeomError::Precondition("axis misses the domain".into()));
    }
    cross_ratio_B(domain, xp, xm, xi, &g.apply(xi))
}

/// Sub-steps used to sample `[t, t + 1]` in [`stable_distance`].
const STABLE_SUBSTEPS: usize = 4;

/// `max_{s ∈ [t, t+1]} d(π φ_s v, π φ_s w)` for each `t` of the grid.
pub fn stable_distance(
    domain: &ConvexDomain,
    v: &UnitTangent,
    w: &UnitTangent,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    if !v.xi_plus.approx_eq(&w.xi_plus, 1e-8) {
        return Err(GeomError::Precondition("forward endpoints differ".into()));
    }
    let b = busemann(domain, &v.xi_plus, &v.foot, &w.foot)?;
    if b.abs() > 1e-6 {
        return Err(GeomError::Precondition(format!("feet are not on a common horosphere (b = {b:.3e})")));
    }
    dynamical_distance(domain, v, w, t_grid, 1.0)
}

/// `max_{s ∈ [t, t + len]} d(π φ_s v, π φ_s w)` sampled on a fixed sub-grid.
pub fn dynamical_distance(
    domain: &ConvexDomain,
    v: &UnitTangent,
    w: &UnitTangent,
    t_grid: &[f64],
    len: f64,
) -> Result<Vec<f64>> {
    t_grid
        .iter()
        .map(|&t| {
            let mut worst: f64 = 0.0;
            for k in 0..=STABLE_SUBSTEPS {
                let s = t + len * k as f64 / STABLE_SUBSTEPS as f64;
                let a = geodesic_flow(domain, v, s)?;
                let b = geodesic_flow(domain, w, s)?;
                worst = worst.max(domain.hilbert_distance(&a.foot, &b.foot)?);
            }
            Ok(worst)
        })
        .collect()
}

/// `d_{T¹Ω}(v, w) = max_{s ∈ [0, 1]} d(π φ_s v, π φ_s w)`.
pub fn tangent_distance(domain: &ConvexDomain, v: &UnitTangent, w: &UnitTangent) -> Result<f64> {
    Ok(dynamical_distance(domain, v, w, &[0.0], 1.0)?[0])
}

#[cfg(test)]
mod tests;

use rayon::prelude::*;
use serde::Serialize;

use super::{GroupElement, OrbitBall, WordBall};
use crate::domain::ConvexDomain;
use crate::error::{GeomError, Result};
use crate::flow::{geodesic_flow, tangent_distance, UnitTangent};
use crate::projective::ProjectivePoint;

#[derive(Clone, Debug)]
pub struct ClosingHit {
    pub element: GroupElement,
    /// `ℓ(γ)`.
    pub period: f64,
    /// `d_{T¹Ω}(φ_t v, γ v)`.
    pub mismatch: f64,
    /// `|period − t|`.
    pub period_defect: f64,
}

/// Looks for `γ` in the ball with `γ v` within `ε` of `φ_t v`, the closest
/// one winning, and returns it when it is biproximal.
pub fn closing_search(
    domain: &ConvexDomain,
    ball: &WordBall,
    v: &UnitTangent,
    t: f64,
    eps: f64,
) -> Result<Option<ClosingHit>> {
    let target = geodesic_flow(domain, v, t)?;
    let best = ball
        .elements
        .par_iter()
        .filter(|e| !e.is_empty())
        .filter_map(|e| {
            // Cheap footpoint filter before the tangent distance.
            let d0 = domain.orbit_point_distance(&v.foot, &e.map, &target.foot).ok()?;
            if d0 >= eps {
                return None;
            }
            let d = tangent_distance(domain, &target, &v.transform(&e.map)).ok()?;
            (d < eps).then_some((d, e))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.word.len().cmp(&b.1.word.len())));
    let Some((mismatch, e)) = best else {
        return Ok(None);
    };
    let spec = e.map.spectral()?;
    if !spec.biproximal {
        return Ok(None);
    }
    Ok(Some(ClosingHit { element: e.clone(), period: spec.ell, mismatch, period_defect: (spec.ell - t).abs() }))
}

#[derive(Clone, Debug, Serialize)]
pub struct DirichletResult {
    /// `γ⁻¹ x`.
    pub reduced: ProjectivePoint,
    pub word: Vec<u16>,
    /// `d_Ω(o, γ⁻¹x)`.
    pub distance: f64,
}

/// `γ` in the ball minimizing `d_Ω(o, γ⁻¹x) = d_Ω(γo, x)`; ties go to the
/// shortest word.
pub fn dirichlet_reduce(domain: &ConvexDomain, ball: &OrbitBall, x: &ProjectivePoint) -> Result<DirichletResult> {
    if !domain.contains(x) {
        return Err(GeomError::NotInDomain { near_boundary: domain.membership(x).near_boundary });
    }
    // The identity wins ties so that reduction is idempotent.
    let score = |&(i, d): &(usize, f64)| if i == 0 { d } else { d + 1e-12 };
    let (i, distance) = ball
        .elements
        .par_iter()
        .enumerate()
        .filter_map(|(i, e)| {
            let d = domain.orbit_point_distance(&ball.basepoint, &e.element.map, x).ok()?;
            d.is_finite().then_some((i, d))
        })
        .min_by(|a, b| score(a).total_cmp(&score(b)).then(a.0.cmp(&b.0)))
        .ok_or(GeomError::Empty("orbit ball"))?;
    let g = &ball.elements[i].element;
    Ok(DirichletResult { reduced: g.map.inverse().apply(x), word: g.word.clone(), distance })
}

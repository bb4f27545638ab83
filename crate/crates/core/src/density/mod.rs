//! Discretized Patterson–Sullivan densities and the statistics built on
//! them: shadow ratios, Bowen–Margulis sampling, equidistribution, mixing
//! and separated-set entropy.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::ConvexDomain;
use crate::error::{GeomError, Result};
use crate::flow::busemann;
use crate::group::{GroupPresentation, OrbitBall};
use crate::projective::ProjectivePoint;

mod bm;
mod entropy;
mod shadow_report;

pub use bm::{
    bm_sampler, equidistribution_report, geodesic_average, mixing_correlation, quotient_samples, BMSample,
    BMSampleSet, EquidistributionRow, MixingPoint, Observable, WeightedTangent, EXHAUSTIVE_PAIR_LIMIT,
};
pub use entropy::{
    core_tangents, entropy_estimate, entropy_radius, sample_ball_tangents, EntropyEstimate, DEFAULT_ENTROPY_RADIUS,
    MIN_ENTROPY_SAMPLES,
};
pub use shadow_report::{default_shadow_annulus, default_shadow_radius, shadow_lemma_report, ShadowReport, ShadowRow};

/// Weight profile `h` in `h(d) e^{−s d}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Smear {
    /// `h ≡ 1`.
    One,
    /// `h(r) = e^{ε (r − r₀)⁺}`, slowly increasing for small `ε`.
    SlowlyGrowing { eps: f64, r0: f64 },
}

impl Smear {
    fn log_h(&self, r: f64) -> f64 {
        match *self {
            Smear::One => 0.0,
            Smear::SlowlyGrowing { eps, r0 } => eps * (r - r0).max(0.0),
        }
    }
}

/// A weighted boundary point carried by an orbit point `γo`.
#[derive(Clone, Debug, Serialize)]
pub struct Atom {
    /// Exit point of the ray from the basepoint through `γo`.
    pub direction: ProjectivePoint,
    pub weight: f64,
    pub word: Vec<u16>,
    /// `d(o, γo)`.
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AtomicDensity {
    pub basepoint: ProjectivePoint,
    pub s: f64,
    pub depth: usize,
    pub atoms: Vec<Atom>,
    pub total_mass: f64,
}

/// Default exponent `δ̂ + 1/L`.
pub fn default_exponent(delta_hat: f64, depth: usize) -> f64 {
    delta_hat + 1.0 / depth.max(1) as f64
}

/// `Σ_γ e^{−s d(o, γo)} δ_{ξ_γ}` over the ball, normalized; the identity has no
/// direction and is left out.
pub fn build_density(ball: &OrbitBall, s: f64) -> Result<AtomicDensity> {
    build_density_with(ball, s, Smear::One)
}

pub fn build_density_with(ball: &OrbitBall, s: f64, smear: Smear) -> Result<AtomicDensity> {
    let raw: Vec<(&ProjectivePoint, f64, &[u16], f64)> = ball
        .elements
        .iter()
        .filter_map(|e| {
            let dir = e.direction.as_ref()?;
            Some((dir, smear.log_h(e.distance) - s * e.distance, e.element.word.as_slice(), e.distance))
        })
        .collect();
    if raw.is_empty() {
        return Err(GeomError::Empty("orbit ball without nontrivial elements"));
    }
    let top = raw.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = raw.iter().map(|r| (r.1 - top).exp()).sum();
    let atoms = raw
        .into_iter()
        .map(|(dir, lw, word, distance)| Atom {
            direction: dir.clone(),
            weight: (lw - top).exp() / z,
            word: word.to_vec(),
            distance,
        })
        .collect();
    Ok(AtomicDensity { basepoint: ball.basepoint.clone(), s, depth: ball.depth, atoms, total_mass: 1.0 })
}

#[derive(Clone, Debug)]
pub struct Reweighted {
    pub density: AtomicDensity,
    /// `Σ w_ξ e^{−s b_ξ(x, o)}` before renormalization.
    pub unnormalized_mass: f64,
    /// Atoms dropped because their Busemann value failed.
    pub excluded: usize,
}

/// Change of basepoint `dν_x/dν_o(ξ) = e^{−s b_ξ(x, o)}`, renormalized.
pub fn reweight(domain: &ConvexDomain, nu: &AtomicDensity, x: &ProjectivePoint) -> Result<Reweighted> {
    if !domain.contains(x) {
        return Err(GeomError::NotInDomain { near_boundary: domain.membership(x).near_boundary });
    }
    let o = &nu.basepoint;
    let factors: Vec<Option<f64>> = nu
        .atoms
        .par_iter()
        .map(|a| busemann(domain, &a.direction, x, o).ok().map(|b| -nu.s * b))
        .collect();
    let excluded = factors.iter().filter(|f| f.is_none()).count();
    let kept: Vec<(&Atom, f64)> =
        nu.atoms.iter().zip(&factors).filter_map(|(a, f)| f.map(|lf| (a, a.weight.ln() + lf))).collect();
    if kept.is_empty() {
        return Err(GeomError::Empty("atoms with a Busemann value"));
    }
    let top = kept.iter().map(|k| k.1).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = kept.iter().map(|k| (k.1 - top).exp()).sum();
    let atoms = kept
        .iter()
        .map(|(a, lw)| Atom { weight: (lw - top).exp() / z, ..(*a).clone() })
        .collect();
    Ok(Reweighted {
        density: AtomicDensity { basepoint: x.clone(), s: nu.s, depth: nu.depth, atoms, total_mass: 1.0 },
        unnormalized_mass: z * top.exp(),
        excluded,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivarianceDefect {
    /// Total variation between `γ_*ν_o` and `ν_{γo}` on their shared atoms,
    /// each renormalized there.
    pub total_variation: f64,
    pub shared_atoms: usize,
    /// Mass of `γ_*ν_o` carried by the shared atoms.
    pub shared_mass: f64,
}

/// Compares `γ_*ν_o`, whose atom carried by `h` sits on `γh`, with the
/// reweighted density at `γo`, matching atoms by freely reduced words.
pub fn equivariance_defect(
    domain: &ConvexDomain,
    gamma: &GroupPresentation,
    nu: &AtomicDensity,
    g_word: &[u16],
) -> Result<EquivarianceDefect> {
    if !gamma.is_free() {
        return Err(GeomError::Precondition("word matching needs a group flagged free".into()));
    }
    let g = gamma.evaluate(g_word);
    let moved = reweight(domain, nu, &g.apply(&nu.basepoint))?.density;
    let target: HashMap<&[u16], f64> = moved.atoms.iter().map(|a| (a.word.as_slice(), a.weight)).collect();
    let mut pairs = Vec::new();
    for a in &nu.atoms {
        let mut w = g_word.to_vec();
        w.extend_from_slice(&a.word);
        if let Some(&q) = target.get(gamma.reduce(&w).as_slice()) {
            pairs.push((a.weight, q));
        }
    }
    if pairs.is_empty() {
        return Err(GeomError::Empty("shared atoms"));
    }
    let zp: f64 = pairs.iter().map(|p| p.0).sum();
    let zq: f64 = pairs.iter().map(|p| p.1).sum();
    let tv = 0.5 * pairs.iter().map(|(p, q)| (p / zp - q / zq).abs()).sum::<f64>();
    Ok(EquivarianceDefect { total_variation: tv, shared_atoms: pairs.len(), shared_mass: zp })
}

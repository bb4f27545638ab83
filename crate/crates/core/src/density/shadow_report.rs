use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use super::AtomicDensity;
use crate::domain::ConvexDomain;
use crate::error::{GeomError, Result};
use crate::group::{ols, OrbitBall};

#[derive(Clone, Debug, Serialize)]
pub struct ShadowRow {
    pub word: Vec<u16>,
    pub distance: f64,
    /// `ν(O_R(o, γo))`.
    pub mass: f64,
    /// `ν(O_R(o, γo)) · e^{δ̂ d(o, γo)}`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShadowReport {
    pub radius: f64,
    pub delta_hat: f64,
    pub s: f64,
    /// Word lengths of the rows.
    pub annulus: (usize, usize),
    pub rows: Vec<ShadowRow>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Smallest `C` with every ratio in `[1/C, C]`.
    pub constant: f64,
    /// Least-squares slope of `ln ratio` against `d(o, γo)`; NaN when the rows
    /// share one distance.
    pub slope: f64,
    pub slope_stderr: f64,
}

/// `2 · max d(o, s o)` over the generators.
pub fn default_shadow_radius(ball: &OrbitBall) -> f64 {
    let hi = ball.layer_start.get(2).copied().unwrap_or(ball.elements.len());
    2.0 * ball.elements[ball.layer_start[1].min(hi)..hi].iter().map(|e| e.distance).fold(0.0, f64::max)
}

/// Word lengths `2 ..= ⌊L/2⌋`. Generators sit within `R/2` of `o` for the
/// default radius, so their shadows are the whole boundary; stopping at `L/2`
/// leaves at least `L/2` levels of descendants below every row.
pub fn default_shadow_annulus(depth: usize) -> RangeInclusive<usize> {
    2..=(depth / 2).max(2)
}

/// Shadow masses `Σ w_ξ 1[d(γo, [o, ξ)) < R]` for the ball elements whose word
/// length lies in `annulus`.
pub fn shadow_lemma_report(
    domain: &ConvexDomain,
    nu: &AtomicDensity,
    ball: &OrbitBall,
    radius: f64,
    delta_hat: f64,
    annulus: RangeInclusive<usize>,
) -> Result<ShadowReport> {
    let (lo, hi) = (*annulus.start(), (*annulus.end()).min(ball.depth));
    if lo == 0 || lo > hi {
        return Err(GeomError::Precondition(format!("empty shadow annulus {lo}..={hi}")));
    }
    let o = &nu.basepoint;
    let rows: Vec<ShadowRow> = ball.elements[ball.layer_start[lo]..ball.layer_start[hi + 1]]
        .par_iter()
        .map(|e| {
            let mut mass = 0.0;
            for a in &nu.atoms {
                if domain.orbit_point_to_ray(o, &a.direction, &e.element.map)? < radius {
                    mass += a.weight;
                }
            }
            let mass = mass.min(1.0);
            Ok(ShadowRow {
                word: e.element.word.clone(),
                distance: e.distance,
                mass,
                ratio: mass * (delta_hat * e.distance).exp(),
            })
        })
        .collect::<Result<_>>()?;
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let positive: Vec<&ShadowRow> = rows.iter().filter(|r| r.ratio > 0.0).collect();
    // A single distance (one layer of a symmetric fixture) leaves the slope undefined.
    let (slope, slope_stderr) = ols(
        &positive.iter().map(|r| r.distance).collect::<Vec<_>>(),
        &positive.iter().map(|r| r.ratio.ln()).collect::<Vec<_>>(),
    )
    .map_or((f64::NAN, f64::NAN), |f| (f.slope, f.stderr));
    Ok(ShadowReport {
        radius,
        delta_hat,
        s: nu.s,
        annulus: (lo, hi),
        rows,
        min_ratio,
        max_ratio,
        constant: max_ratio.max(1.0 / min_ratio),
        slope,
        slope_stderr,
    })
}

//! Distances to segments and shadows `O_r(x, y)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Backend, ConvexDomain};
use crate::error::{GeomError, Result};
use crate::projective::{ProjectiveMap, ProjectivePoint, Vector};

/// Number of sampled `z ∈ B(x, r)` for the plus/minus variants.
pub const DEFAULT_SHADOW_SAMPLES: usize = 64;

const GOLDEN_ITERS: usize = 200;
const GOLDEN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowVariant {
    /// `[x, ξ)` meets `B(y, r)`.
    Plain,
    /// Some `z ∈ B(x, r)` has `[z, ξ)` meeting `B(y, r)`.
    Plus,
    /// Every `z ∈ B(x, r)` has `[z, ξ)` meeting `B(y, r)`.
    Minus,
}

#[derive(Clone, Debug)]
pub struct ShadowSpec {
    pub x: ProjectivePoint,
    pub y: ProjectivePoint,
    pub r: f64,
    pub variant: ShadowVariant,
}

impl ConvexDomain {
    /// Chart parameter range `[t0, t1]` of `[a, b] ∩ Ω` with `c(t) = (1−t)â + t b̂`.
    fn segment_window(&self, ah: &Vector, bh: &Vector) -> Result<(f64, f64)> {
        // Find an interior point of the segment, then exit in both directions.
        let u = bh - ah;
        let probes = [0.5, 0.25, 0.75, 0.1, 0.9, 0.0, 1.0, 0.01, 0.99];
        let t_in = probes
            .iter()
            .copied()
            .find(|&t| self.margin(&(ah + &u * t)) > super::NEAR_BOUNDARY_TOL)
            .ok_or(GeomError::SegmentMissesDomain)?;
        let p = ah + &u * t_in;
        let fwd = self.exit_param(&p, &u)?;
        let bwd = self.exit_param(&p, &(-&u))?;
        Ok(((t_in - bwd).max(0.0), (t_in + fwd).min(1.0)))
    }

    /// `min_t d(c(t), y)` over the part of the segment `[a, b]` inside `Ω`.
    ///
    /// Golden-section search in the chart parameter; Hilbert balls are convex so
    /// `t ↦ d(c(t), y)` has interval sublevel sets.
    pub fn distance_to_segment(&self, a: &ProjectivePoint, b: &ProjectivePoint, y: &ProjectivePoint) -> Result<f64> {
        if let Backend::Ellipsoid(e) = &self.backend {
            let yv = self.lift(y)?;
            if !self.contains(y) {
                return Err(GeomError::NotInDomain { near_boundary: self.membership(y).near_boundary });
            }
            let ah = self.lift(a)?;
            let bh = self.lift(b)?;
            let (t0, t1) = self.segment_window(&ah, &bh)?;
            let u = &bh - &ah;
            let (a2, b2) = (&ah + &u * t0, &ah + &u * t1);
            return Ok(e.distance_to_segment_vec(&a2, &b2, &yv, e.bilinear(&yv, &yv)));
        }
        self.distance_to_segment_search(a, b, y)
    }

    /// Backend-independent golden-section search.
    pub fn distance_to_segment_search(
        &self,
        a: &ProjectivePoint,
        b: &ProjectivePoint,
        y: &ProjectivePoint,
    ) -> Result<f64> {
        let yh = self.require_inside(y)?;
        let ah = self.lift(a)?;
        let bh = self.lift(b)?;
        let (t0, t1) = self.segment_window(&ah, &bh)?;
        let u = &bh - &ah;
        // Keep away from boundary endpoints where the distance is infinite.
        let span = t1 - t0;
        let margin = 1e-12 * span;
        let f = |t: f64| -> f64 {
            let p = &ah + &u * t;
            if self.margin(&p) <= 0.0 {
                return f64::INFINITY;
            }
            self.distance_lifted(&p, &yh).unwrap_or(f64::INFINITY)
        };
        let (mut lo, mut hi) = (t0 + margin, t1 - margin);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut m1 = hi - inv_phi * (hi - lo);
        let mut m2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (f(m1), f(m2));
        for _ in 0..GOLDEN_ITERS {
            if hi - lo <= GOLDEN_TOL * span.max(1e-300) {
                break;
            }
            if f1 <= f2 {
                hi = m2;
                m2 = m1;
                f2 = f1;
                m1 = hi - inv_phi * (hi - lo);
                f1 = f(m1);
            } else {
                lo = m1;
                m1 = m2;
                f1 = f2;
                m2 = lo + inv_phi * (hi - lo);
                f2 = f(m2);
            }
        }
        let best = [f(lo), f1, f2, f(hi)].into_iter().fold(f64::INFINITY, f64::min);
        Ok(best)
    }

    /// `d(g·o, [o, ξ))`, accurate even when `g·o` is beyond the chart's resolution.
    pub fn orbit_point_to_ray(&self, o: &ProjectivePoint, xi: &ProjectivePoint, g: &ProjectiveMap) -> Result<f64> {
        match &self.backend {
            Backend::Ellipsoid(e) => {
                let ov = self.lift(o)?;
                let xv = self.lift(xi)?;
                let gv = g.apply_vec(&ov);
                Ok(e.distance_to_segment_vec(&ov, &xv, &gv, e.bilinear(&ov, &ov)))
            }
            _ => self.distance_to_segment(o, xi, &g.apply(o)),
        }
    }

    /// Membership of `ξ` in the shadow described by `spec`.
    pub fn shadow_contains<R: Rng + ?Sized>(&self, spec: &ShadowSpec, xi: &ProjectivePoint, rng: &mut R) -> Result<bool> {
        self.shadow_contains_with(spec, xi, DEFAULT_SHADOW_SAMPLES, rng)
    }

    pub fn shadow_contains_with<R: Rng + ?Sized>(
        &self,
        spec: &ShadowSpec,
        xi: &ProjectivePoint,
        samples: usize,
        rng: &mut R,
    ) -> Result<bool> {
        let plain = |z: &ProjectivePoint| -> Result<bool> {
            Ok(self.distance_to_segment(z, xi, &spec.y)? < spec.r)
        };
        match spec.variant {
            ShadowVariant::Plain => plain(&spec.x),
            ShadowVariant::Plus | ShadowVariant::Minus => {
                let zs = self.sample_ball(&spec.x, spec.r, samples, rng)?;
                let mut any = false;
                let mut all = true;
                for z in &zs {
                    let hit = plain(z)?;
                    any |= hit;
                    all &= hit;
                }
                Ok(if spec.variant == ShadowVariant::Plus { any } else { all })
            }
        }
    }

    /// `x` followed by `n − 1` random points of the open Hilbert ball `B(x, r)`.
    pub fn sample_ball<R: Rng + ?Sized>(
        &self,
        x: &ProjectivePoint,
        r: f64,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<ProjectivePoint>> {
        let dim = self.dim();
        let mut out = Vec::with_capacity(n);
        if n > 0 {
            out.push(x.clone());
        }
        while out.len() < n {
            let coords: Vec<f64> = (0..dim - 1).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let c = nalgebra::DVector::from_vec(coords);
            let norm = c.norm();
            if norm > 1.0 || norm < 1e-6 {
                continue;
            }
            let dir = &self.chart.basis * c;
            let rho = r * rng.random::<f64>();
            out.push(self.point_at_distance(x, &dir, rho)?);
        }
        Ok(out)
    }
}

//! Separated-set entropy of the geodesic flow.
//!
//! The count is taken over vectors whose foot lies in a small ball
//! `U = B(o, ρ)` around the Dirichlet centre. When `2ρ + ε` is below the
//! shortest orbit displacement, only the identity lift can bring two such
//! vectors within `ε` at time zero, so `d^{(t)}` is computed in the cover
//! with no minimum over `Γ`. Restricting to `U` multiplies `N(t, ε)` by a
//! factor that does not depend on `t`, which leaves the growth rate intact.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::AtomicDensity;
use crate::domain::ConvexDomain;
use crate::error::{GeomError, Result};
use crate::flow::{geodesic_flow, hopf, UnitTangent};
use crate::projective::{Matrix, ProjectivePoint, Vector};

/// Fewest vectors in `U` accepted for an estimate.
pub const MIN_ENTROPY_SAMPLES: usize = 64;

/// Default cap on `ρ`; smaller balls saturate with fewer samples.
pub const DEFAULT_ENTROPY_RADIUS: f64 = 0.1;

/// Largest spacing of the time grid on `[0, t + 1]`.
const TIME_STEP: f64 = 0.5;

const CHUNK: usize = 1 << 14;

#[derive(Clone, Debug, Serialize)]
pub struct EntropyEstimate {
    pub epsilon: f64,
    pub rho: f64,
    /// `t/2` and `t`.
    pub times: [f64; 2],
    pub counts: [usize; 2],
    /// `log N / t` at each time.
    pub rates: [f64; 2],
    /// `(log N(t) − log N(t/2)) / (t/2)`.
    pub slope: f64,
    /// Vectors of the input with foot in `U`.
    pub samples: usize,
}

/// Largest admissible `ρ`: `(min_{γ≠1} d(o, γo) − ε) / 2`, capped at `cap`.
pub fn entropy_radius(min_displacement: f64, eps: f64, cap: f64) -> Result<f64> {
    let rho = (0.5 * (min_displacement - eps)).min(cap);
    if rho <= 0.0 {
        return Err(GeomError::Precondition(format!(
            "ε = {eps} leaves no room below the shortest displacement {min_displacement}"
        )));
    }
    Ok(rho)
}

/// Tangents with foot uniform in chart radius inside `B(o, ρ)` and Gaussian
/// chart direction.
pub fn sample_ball_tangents<R: Rng + ?Sized>(
    domain: &ConvexDomain,
    o: &ProjectivePoint,
    rho: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<UnitTangent>> {
    let c0 = domain.chart_coords(o)?;
    let oh = domain.lift(o)?;
    let k = c0.len();
    let gaussian = |rng: &mut R| -> Result<Vector> {
        let c: Vec<f64> = c0.iter().map(|x| x + 1e-3 * rng.sample::<f64, _>(StandardNormal)).collect();
        Ok(domain.lift(&domain.point(&c)?)? - &oh)
    };
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let r = rho * rng.random::<f64>().powf(1.0 / k as f64);
        let foot = domain.point_at_distance(o, &gaussian(rng)?, r)?;
        let dir = gaussian(rng)?;
        out.push(UnitTangent::from_direction(domain, &foot, &dir)?);
    }
    Ok(out)
}

/// Core vectors through `B(o, ρ)`: chords between atom pairs drawn from
/// `w ⊗ w`, with the foot uniform along the part of the chord inside the ball
/// (by rejection).
pub fn core_tangents<R: Rng + ?Sized>(
    domain: &ConvexDomain,
    nu: &AtomicDensity,
    rho: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<UnitTangent>> {
    let o = &nu.basepoint;
    let pick = WeightedIndex::new(nu.atoms.iter().map(|a| a.weight))
        .map_err(|e| GeomError::Precondition(format!("atom weights: {e}")))?;
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 1000 * (n + 10) {
            return Err(GeomError::Empty("atom chords through the entropy ball"));
        }
        let (i, j) = (pick.sample(rng), pick.sample(rng));
        let Ok(v0) = hopf(domain, o, &nu.atoms[i].direction, &nu.atoms[j].direction, 0.0) else {
            continue;
        };
        // b_η(o, foot) = 0 puts the foot within the Gromov product of o's
        // projection; the ball is reached, if at all, within ρ of it.
        let Ok(d0) = domain.hilbert_distance(o, &v0.foot) else { continue };
        let reach = d0 + rho;
        // Feet far out along the chord can leave the chart's resolution.
        let Ok(v) = geodesic_flow(domain, &v0, rng.random_range(-reach..=reach)) else { continue };
        if domain.hilbert_distance(o, &v.foot).is_ok_and(|d| d < rho) {
            out.push(v);
        }
    }
    Ok(out)
}

struct Packing<'a> {
    domain: &'a ConvexDomain,
    o: Vec<f64>,
    /// Chart-to-visual frame at `o`.
    frame: Matrix,
    eps: f64,
    foot_cell: f64,
    angle_cell: f64,
    centers: Vec<Vec<ProjectivePoint>>,
    buckets: HashMap<Vec<i64>, Vec<u32>>,
}

impl Packing<'_> {
    fn key(&self, traj: &[ProjectivePoint]) -> Result<Vec<i64>> {
        let mut key: Vec<i64> =
            self.domain.chart_coords(&traj[0])?.iter().map(|c| (c / self.foot_cell).floor() as i64).collect();
        let end = self.domain.chart_coords(traj.last().expect("nonempty trajectory"))?;
        let rel = Vector::from_iterator(end.len(), end.iter().zip(&self.o).map(|(a, b)| a - b));
        let u = &self.frame * rel;
        let u = &u / u.norm();
        key.extend(u.iter().map(|c| (c / self.angle_cell).floor() as i64));
        Ok(key)
    }

    fn close(&self, a: &[ProjectivePoint], b: &[ProjectivePoint]) -> Result<bool> {
        let k = a.len() - 1;
        for i in std::iter::once(k).chain(0..k) {
            if self.domain.hilbert_distance(&a[i], &b[i])? >= self.eps {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Adds `traj` as a centre unless one is already within `ε`.
    fn offer(&mut self, traj: Vec<ProjectivePoint>) -> Result<()> {
        let key = self.key(&traj)?;
        let mut probe = key.clone();
        let n = key.len();
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            for i in 0..n {
                probe[i] = key[i] + (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(ids) = self.buckets.get(&probe) {
                for &id in ids {
                    if self.close(&self.centers[id as usize], &traj)? {
                        return Ok(());
                    }
                }
            }
        }
        self.buckets.entry(key).or_default().push(self.centers.len() as u32);
        self.centers.push(traj);
        Ok(())
    }
}

/// Chart distances from `o` to the boundary along `±e` for unit chart
/// directions `e`; `(e, forward, backward)`.
fn exit_radii(domain: &ConvexDomain, o: &ProjectivePoint, dirs: usize) -> Result<Vec<(Vector, f64, f64)>> {
    let c0 = domain.chart_coords(o)?;
    let k = c0.len();
    let oh = domain.lift(o)?;
    let radius = |e: &Vector| -> Result<f64> {
        let shifted: Vec<f64> = c0.iter().zip(e.iter()).map(|(x, d)| x + 1e-3 * d).collect();
        let dir = domain.lift(&domain.point(&shifted)?)? - &oh;
        let b = domain.chart_coords(&domain.exit_point(o, &dir)?)?;
        Ok(b.iter().zip(&c0).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
    };
    // Deterministic spread of directions: coordinate axes, then a golden-angle
    // style sequence on the sphere.
    (0..dirs)
        .map(|i| {
            let e = if i < k {
                Vector::from_fn(k, |j, _| f64::from(j == i))
            } else {
                let v = Vector::from_fn(k, |j, _| ((i * (j + 1)) as f64 * 0.618_033_988_75 * std::f64::consts::TAU).sin());
                let n = v.norm();
                if n < 1e-9 { Vector::from_fn(k, |j, _| f64::from(j == 0)) } else { v / n }
            };
            Ok((e.clone(), radius(&e)?, radius(&(-&e))?))
        })
        .collect()
}

/// Linear map `W` on chart vectors at `o` with `|W u| = F(o, u)`, the Hilbert
/// norm at `o`, fitted as a quadratic form. Exact for ellipsoids, where
/// directions seen from `o` then carry the hyperbolic visual angle.
fn visual_frame(domain: &ConvexDomain, o: &ProjectivePoint) -> Result<Matrix> {
    let k = domain.chart_coords(o)?.len();
    let radii = exit_radii(domain, o, 16 * k * k)?;
    let idx: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let rows = radii.len();
    let mut a = Matrix::zeros(rows, idx.len());
    let mut y = Vector::zeros(rows);
    for (r, (e, fwd, bwd)) in radii.iter().enumerate() {
        for (c, &(i, j)) in idx.iter().enumerate() {
            a[(r, c)] = e[i] * e[j] * if i == j { 1.0 } else { 2.0 };
        }
        y[r] = (0.5 * (1.0 / fwd + 1.0 / bwd)).powi(2);
    }
    let q = a
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| GeomError::SpectralFailure(format!("visual frame fit: {e}")))?;
    let mut form = Matrix::zeros(k, k);
    for (c, &(i, j)) in idx.iter().enumerate() {
        form[(i, j)] = q[c];
        form[(j, i)] = q[c];
    }
    let chol = form
        .cholesky()
        .ok_or_else(|| GeomError::SpectralFailure("Hilbert norm at o is not quadratic enough".into()))?;
    Ok(chol.l().transpose())
}

/// Greedy maximal `ε`-separated subset of `vectors` for
/// `d^{(t)}(v, w) = max_{s ∈ [0, t+1]} d(π φ_s v, π φ_s w)`, in input order.
fn separated_count(domain: &ConvexDomain, o: &ProjectivePoint, vectors: &[UnitTangent], t: f64, eps: f64) -> Result<usize> {
    let horizon = t + 1.0;
    let steps = (horizon / TIME_STEP).ceil() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| horizon * k as f64 / steps as f64).collect();
    // Along a chord with boundary distances a, b the Hilbert speed is
    // ½(1/a + 1/b) ≥ 2/diam, so chart displacement is at most d_Ω · diam / 2.
    let radii = exit_radii(domain, o, 8 * domain.chart_coords(o)?.len().pow(2))?;
    let diam = 2.0 * radii.iter().map(|r| r.1.max(r.2)).fold(0.0, f64::max);
    let foot_cell = eps * diam;
    // A segment of length ε outside B(o, R) subtends a visual angle at most
    // 2 asin(sinh(ε/2) / sinh R) in the hyperbolic metric; doubled for slack.
    let r_min = horizon
        - vectors
            .iter()
            .map(|v| domain.hilbert_distance(o, &v.foot))
            .try_fold(0.0, |m, d| d.map(|d| f64::max(m, d)))?;
    let angle_cell = 4.0 * ((0.5 * eps).sinh() / r_min.max(1.0).sinh()).min(1.0).asin();
    let mut packing = Packing {
        domain,
        o: domain.chart_coords(o)?,
        frame: visual_frame(domain, o)?,
        eps,
        foot_cell,
        angle_cell,
        centers: Vec::new(),
        buckets: HashMap::new(),
    };
    for chunk in vectors.chunks(CHUNK) {
        let trajs: Vec<Vec<ProjectivePoint>> = chunk
            .par_iter()
            .map(|v| times.iter().map(|&s| geodesic_flow(domain, v, s).map(|w| w.foot)).collect())
            .collect::<Result<_>>()?;
        for traj in trajs {
            packing.offer(traj)?;
        }
    }
    Ok(packing.centers.len())
}

/// Separated-set growth between `t/2` and `t` over the vectors with foot in
/// `B(o, ρ)`.
pub fn entropy_estimate(
    domain: &ConvexDomain,
    o: &ProjectivePoint,
    vectors: &[UnitTangent],
    t: f64,
    eps: f64,
    rho: f64,
) -> Result<EntropyEstimate> {
    let inside: Vec<UnitTangent> = vectors
        .iter()
        .filter(|v| domain.hilbert_distance(o, &v.foot).is_ok_and(|d| d < rho))
        .cloned()
        .collect();
    if inside.len() < MIN_ENTROPY_SAMPLES {
        return Err(GeomError::Precondition(format!(
            "{} vectors in B(o, {rho}), need {MIN_ENTROPY_SAMPLES}",
            inside.len()
        )));
    }
    if t <= 0.0 || eps <= 0.0 {
        return Err(GeomError::Precondition("entropy needs t > 0 and ε > 0".into()));
    }
    let times = [0.5 * t, t];
    let counts = [
        separated_count(domain, o, &inside, times[0], eps)?,
        separated_count(domain, o, &inside, times[1], eps)?,
    ];
    let rates = [(counts[0] as f64).ln() / times[0], (counts[1] as f64).ln() / times[1]];
    let slope = ((counts[1] as f64).ln() - (counts[0] as f64).ln()) / (times[1] - times[0]);
    Ok(EntropyEstimate { epsilon: eps, rho, times, counts, rates, slope, samples: inside.len() })
}

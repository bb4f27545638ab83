use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::AtomicDensity;
use crate::domain::ConvexDomain;
use crate::error::{GeomError, Result};
use crate::flow::{busemann, geodesic_flow, gromov_product, hopf, UnitTangent};
use crate::group::{ClassKind, ConjClass, Reducer};
use crate::projective::ProjectivePoint;

/// Ordered atom pairs enumerated exhaustively up to this count.
pub const EXHAUSTIVE_PAIR_LIMIT: usize = 1_000_000;

/// Directions closer than this (chordally) count as the same boundary point.
const SAME_DIRECTION: f64 = 1e-9;

/// Importance-weighted point of `m̃` in Hopf coordinates at the density's
/// basepoint. `xi` and `eta` index atoms.
#[derive(Clone, Debug, Serialize)]
pub struct BMSample {
    pub xi: usize,
    pub eta: usize,
    pub t: f64,
    /// Normalized over the set.
    pub weight: f64,
}

impl BMSample {
    pub fn tangent(&self, domain: &ConvexDomain, nu: &AtomicDensity) -> Result<UnitTangent> {
        hopf(domain, &nu.basepoint, &nu.atoms[self.xi].direction, &nu.atoms[self.eta].direction, self.t)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BMSampleSet {
    pub samples: Vec<BMSample>,
    pub window: f64,
    pub exhaustive: bool,
    /// `1 / Σ w²`.
    pub effective_size: f64,
    /// Pairs dropped as not geodesic.
    pub excluded: usize,
}

fn pair_log_weight(domain: &ConvexDomain, nu: &AtomicDensity, i: usize, j: usize, delta: f64) -> Option<f64> {
    let (a, b) = (&nu.atoms[i].direction, &nu.atoms[j].direction);
    if a.chordal_distance(b) < SAME_DIRECTION {
        return None;
    }
    let g = gromov_product(domain, a, b, &nu.basepoint).ok()?;
    g.is_finite().then_some(2.0 * delta * g)
}

fn finish(mut samples: Vec<BMSample>, log_w: Vec<f64>, window: f64, exhaustive: bool, excluded: usize) -> Result<BMSampleSet> {
    if samples.is_empty() {
        return Ok(BMSampleSet { samples, window, exhaustive, effective_size: 0.0, excluded });
    }
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = log_w.iter().map(|l| (l - top).exp()).sum();
    for (s, l) in samples.iter_mut().zip(&log_w) {
        s.weight = (l - top).exp() / z;
    }
    let ess = 1.0 / samples.iter().map(|s| s.weight * s.weight).sum::<f64>();
    Ok(BMSampleSet { samples, window, exhaustive, effective_size: ess, excluded })
}

/// Samples `w(ξ) w(η) e^{2δ̂⟨ξ,η⟩_o} dξ dη dt` with `t` uniform on
/// `[−window/2, window/2]`.
///
/// Every ordered pair is used when there are at most
/// [`EXHAUSTIVE_PAIR_LIMIT`] of them, repeated with fresh times until `n`
/// samples exist. Otherwise pairs are drawn from `w ⊗ w` and carry the Gromov
/// factor as importance weight; each draw is emitted with its flip so the
/// weighted law of `(ξ, η)` is exactly symmetric.
pub fn bm_sampler<R: Rng + ?Sized>(
    domain: &ConvexDomain,
    nu: &AtomicDensity,
    delta_hat: f64,
    n: usize,
    window: f64,
    rng: &mut R,
) -> Result<BMSampleSet> {
    let m = nu.atoms.len();
    if m < 2 {
        return Err(GeomError::Precondition("BM sampling needs two atoms".into()));
    }
    let half = 0.5 * window;
    let time = |rng: &mut R| if half > 0.0 { rng.random_range(-half..=half) } else { 0.0 };
    if n == 0 {
        return finish(Vec::new(), Vec::new(), window, m * (m - 1) <= EXHAUSTIVE_PAIR_LIMIT, 0);
    }
    let mut samples = Vec::new();
    let mut log_w = Vec::new();
    let mut excluded = 0;
    if m * (m - 1) <= EXHAUSTIVE_PAIR_LIMIT {
        let pairs: Vec<(usize, usize, Option<f64>)> = (0..m)
            .into_par_iter()
            .flat_map_iter(|i| (i + 1..m).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, pair_log_weight(domain, nu, i, j, delta_hat)))
            .collect();
        let kept: Vec<(usize, usize, f64)> = pairs
            .into_iter()
            .filter_map(|(i, j, l)| match l {
                Some(l) => Some((i, j, l + nu.atoms[i].weight.ln() + nu.atoms[j].weight.ln())),
                None => {
                    excluded += 2;
                    None
                }
            })
            .collect();
        if kept.is_empty() {
            return Err(GeomError::Empty("geodesic atom pairs"));
        }
        let reps = n.div_ceil(2 * kept.len());
        for _ in 0..reps {
            for &(i, j, l) in &kept {
                for (a, b) in [(i, j), (j, i)] {
                    samples.push(BMSample { xi: a, eta: b, t: time(rng), weight: 0.0 });
                    log_w.push(l);
                }
            }
        }
        return finish(samples, log_w, window, true, excluded);
    }
    let pick = WeightedIndex::new(nu.atoms.iter().map(|a| a.weight))
        .map_err(|e| GeomError::Precondition(format!("atom weights: {e}")))?;
    let draws = n.div_ceil(2);
    let mut attempts = 0usize;
    while samples.len() < 2 * draws {
        attempts += 1;
        if attempts > 100 * draws + 1000 {
            if samples.is_empty() {
                return Err(GeomError::Empty("geodesic atom pairs"));
            }
            break;
        }
        let (i, j) = (pick.sample(rng), pick.sample(rng));
        match (i != j).then(|| pair_log_weight(domain, nu, i, j, delta_hat)).flatten() {
            Some(l) => {
                for (a, b) in [(i, j), (j, i)] {
                    samples.push(BMSample { xi: a, eta: b, t: time(rng), weight: 0.0 });
                    log_w.push(l);
                }
            }
            None => excluded += 1,
        }
    }
    finish(samples, log_w, window, false, excluded)
}

#[derive(Clone, Debug)]
pub struct WeightedTangent {
    pub v: UnitTangent,
    pub weight: f64,
}

/// Samples whose foot lies in the Dirichlet domain at `o`, renormalized: a
/// Monte-Carlo picture of the Bowen–Margulis measure on `T¹M`.
pub fn quotient_samples(
    domain: &ConvexDomain,
    nu: &AtomicDensity,
    set: &BMSampleSet,
    reducer: &Reducer,
) -> Result<Vec<WeightedTangent>> {
    let kept: Vec<WeightedTangent> = set
        .samples
        .par_iter()
        .filter_map(|s| {
            let v = s.tangent(domain, nu).ok()?;
            reducer.in_domain(domain, &v.foot).ok()?.then(|| WeightedTangent { v, weight: s.weight })
        })
        .collect();
    let z: f64 = kept.iter().map(|w| w.weight).sum();
    if kept.is_empty() || z <= 0.0 {
        return Err(GeomError::Empty("samples with foot in the Dirichlet domain"));
    }
    Ok(kept.into_iter().map(|w| WeightedTangent { weight: w.weight / z, ..w }).collect())
}

/// Functions on reduced tangents; `o` is the Dirichlet centre, so each is
/// Γ-invariant away from the domain's faces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Constant,
    /// `1[d(o, foot) < r]`.
    Ball { r: f64 },
    /// `exp(1 − 1/(1 − (d/r)²))` inside the ball, a smooth bump.
    SmoothBall { r: f64 },
    /// `tanh b_{ξ⁺}(foot, o) − tanh b_{ξ⁻}(foot, o)`, odd under the flip.
    Drift,
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Constant => "constant".into(),
            Observable::Ball { r } => format!("ball_{r}"),
            Observable::SmoothBall { r } => format!("smooth_ball_{r}"),
            Observable::Drift => "drift".into(),
        }
    }

    pub fn eval(&self, domain: &ConvexDomain, o: &ProjectivePoint, v: &UnitTangent) -> Result<f64> {
        Ok(match *self {
            Observable::Constant => 1.0,
            Observable::Ball { r } => f64::from(domain.hilbert_distance(o, &v.foot)? < r),
            Observable::SmoothBall { r } => {
                let u = (domain.hilbert_distance(o, &v.foot)? / r).powi(2);
                if u < 1.0 {
                    (1.0 - 1.0 / (1.0 - u)).exp()
                } else {
                    0.0
                }
            }
            Observable::Drift => {
                busemann(domain, &v.xi_plus, &v.foot, o)?.tanh() - busemann(domain, &v.xi_minus, &v.foot, o)?.tanh()
            }
        })
    }
}

/// Mean of `f` over one period of the closed geodesic of a rank-one class,
/// periodic trapezoid rule on `points ≥ 256` nodes starting `offset` along
/// the axis.
pub fn geodesic_average(
    domain: &ConvexDomain,
    reducer: &Reducer,
    class: &ConjClass,
    f: Observable,
    points: usize,
    offset: f64,
) -> Result<f64> {
    if class.kind != ClassKind::RankOne {
        return Err(GeomError::Precondition("geodesic average needs a rank-one class".into()));
    }
    let sp = class.representative.map.spectral()?;
    let (xp, xm) = match (&sp.x_plus, &sp.x_minus) {
        (Some(p), Some(m)) => (p.clone(), m.clone()),
        _ => return Err(GeomError::Precondition("rank-one class without an axis".into())),
    };
    let foot = crate::flow::chord_point(domain, &xm, &xp)?;
    let v0 = reducer.reduce_tangent(domain, &UnitTangent { xi_minus: xm, xi_plus: xp, foot })?;
    let n = points.max(256);
    let h = class.ell / n as f64;
    let o = &reducer.basepoint;
    let vals: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let v = reducer.reduce_tangent(domain, &geodesic_flow(domain, &v0, offset + k as f64 * h)?)?;
            f.eval(domain, o, &v)
        })
        .collect::<Result<_>>()?;
    Ok(vals.iter().sum::<f64>() / n as f64)
}

fn weighted_mean(values: &[f64], weights: &[f64]) -> (f64, f64) {
    let mean: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
    let var: f64 = values.iter().zip(weights).map(|(v, w)| (w * (v - mean)).powi(2)).sum();
    (mean, var.sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct EquidistributionRow {
    pub observable: String,
    pub t: f64,
    pub classes: usize,
    pub class_mean: f64,
    pub class_stderr: f64,
    pub bm_mean: f64,
    pub bm_stderr: f64,
    pub discrepancy: f64,
}

/// For each `T` and observable: the equally weighted mean of geodesic
/// averages over rank-one classes with `ℓ ≤ T` against the Bowen–Margulis
/// Monte-Carlo mean.
pub fn equidistribution_report(
    domain: &ConvexDomain,
    reducer: &Reducer,
    classes: &[ConjClass],
    bm: &[WeightedTangent],
    t_grid: &[f64],
    observables: &[Observable],
    points: usize,
) -> Result<Vec<EquidistributionRow>> {
    let t_max = t_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let used: Vec<&ConjClass> =
        classes.iter().filter(|c| c.kind == ClassKind::RankOne && c.ell <= t_max).collect();
    if used.len() < 5 {
        return Err(GeomError::Precondition(format!("{} rank-one classes below T = {t_max}, need 5", used.len())));
    }
    let weights: Vec<f64> = bm.iter().map(|w| w.weight).collect();
    let o = &reducer.basepoint;
    let mut rows = Vec::new();
    for f in observables {
        let averages: Vec<f64> =
            used.iter().map(|c| geodesic_average(domain, reducer, c, *f, points, 0.0)).collect::<Result<_>>()?;
        let values: Vec<f64> = bm.par_iter().map(|w| f.eval(domain, o, &w.v)).collect::<Result<_>>()?;
        let (bm_mean, bm_stderr) = weighted_mean(&values, &weights);
        for &t in t_grid {
            let sel: Vec<f64> = used.iter().zip(&averages).filter(|(c, _)| c.ell <= t).map(|(_, a)| *a).collect();
            let k = sel.len();
            let (class_mean, class_stderr) = if k == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let mean = sel.iter().sum::<f64>() / k as f64;
                let var = if k > 1 { sel.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (k - 1) as f64 } else { 0.0 };
                (mean, (var / k as f64).sqrt())
            };
            rows.push(EquidistributionRow {
                observable: f.name(),
                t,
                classes: k,
                class_mean,
                class_stderr,
                bm_mean,
                bm_stderr,
                discrepancy: (class_mean - bm_mean).abs(),
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingPoint {
    pub t: f64,
    /// `m(A ∩ φ_{−t} B)` for the normalized measure.
    pub correlation: f64,
    pub stderr: f64,
    pub mass_a: f64,
    pub mass_b: f64,
}

impl MixingPoint {
    /// `|C(t) − m(A) m(B)|`.
    pub fn discrepancy(&self) -> f64 {
        (self.correlation - self.mass_a * self.mass_b).abs()
    }
}

/// `C(t) = Σ w A(v) B(φ_t v)` along an increasing time grid, flowing each
/// sample incrementally with reduction after every step of at most `step`.
pub fn mixing_correlation(
    domain: &ConvexDomain,
    reducer: &Reducer,
    samples: &[WeightedTangent],
    a: Observable,
    b: Observable,
    t_grid: &[f64],
    step: f64,
) -> Result<Vec<MixingPoint>> {
    if samples.is_empty() {
        return Err(GeomError::Empty("mixing samples"));
    }
    let o = &reducer.basepoint;
    let weights: Vec<f64> = samples.iter().map(|w| w.weight).collect();
    let av: Vec<f64> = samples.par_iter().map(|w| a.eval(domain, o, &w.v)).collect::<Result<_>>()?;
    let bv: Vec<f64> = samples.par_iter().map(|w| b.eval(domain, o, &w.v)).collect::<Result<_>>()?;
    let (mass_a, _) = weighted_mean(&av, &weights);
    let (mass_b, _) = weighted_mean(&bv, &weights);
    if mass_a <= 0.0 || mass_b <= 0.0 {
        return Err(GeomError::Precondition(format!("degenerate observable masses {mass_a}, {mass_b}")));
    }
    let mut times = t_grid.to_vec();
    times.sort_by(f64::total_cmp);
    // Only samples with A(v) ≠ 0 contribute.
    let mut live: Vec<(usize, UnitTangent)> =
        samples.iter().enumerate().filter(|(i, _)| av[*i] != 0.0).map(|(i, w)| (i, w.v.clone())).collect();
    let mut now = 0.0;
    let mut out = Vec::new();
    for &t in &times {
        if t < now {
            return Err(GeomError::Precondition("negative mixing time".into()));
        }
        let dt = t - now;
        if dt > 0.0 {
            live = live
                .into_par_iter()
                .map(|(i, v)| Ok((i, reducer.flow_reduced(domain, &v, dt, step)?)))
                .collect::<Result<_>>()?;
        }
        now = t;
        let mut y = vec![0.0; samples.len()];
        let vals: Vec<(usize, f64)> =
            live.par_iter().map(|(i, v)| Ok((*i, av[*i] * b.eval(domain, o, v)?))).collect::<Result<_>>()?;
        for (i, val) in vals {
            y[i] = val;
        }
        let (correlation, stderr) = weighted_mean(&y, &weights);
        out.push(MixingPoint { t, correlation, stderr, mass_a, mass_b });
    }
    Ok(out)
}

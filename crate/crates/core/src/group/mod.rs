//! Finitely generated matrix groups: word balls, orbit statistics, critical
//! exponents, conjugacy census and the closing search.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::ConvexDomain;
use crate::error::{GeomError, Result};
use crate::projective::{Matrix, ProjectiveMap, ProjectivePoint, Vector};

mod closing;
mod conjugacy;
pub mod fixtures;
mod quotient;

pub use closing::{closing_search, dirichlet_reduce, ClosingHit, DirichletResult};
pub use conjugacy::{
    classify_element, conjugacy_classes, count_table, counting_rate, cyclic_key, ClassCensus, ClassKind, ConjClass, ConjStrategy,
    CountRow,
};
pub use fixtures::Fixture;
pub use quotient::Reducer;

/// Default abort threshold of [`enumerate_ball`].
pub const DEFAULT_ELEMENT_CAP: usize = 200_000;

/// Two elements are identified when their `|det| = 1` matrices agree to this,
/// relative to the largest entry.
pub const DEDUP_TOL: f64 = 1e-8;

const BUCKET_WIDTH: f64 = 1e-7;

/// Generators closed under formal inverses.
#[derive(Clone, Debug)]
pub struct GroupPresentation {
    generators: Vec<ProjectiveMap>,
    labels: Vec<String>,
    inverse_of: Vec<usize>,
    free: bool,
}

impl GroupPresentation {
    /// Adds missing inverses. Involutions are their own inverse; a generator
    /// whose inverse is already listed is paired with it.
    pub fn new(generators: Vec<(String, ProjectiveMap)>, free: bool) -> Result<Self> {
        let n = generators.first().map(|g| g.1.dim()).ok_or(GeomError::Empty("generators"))?;
        let mut maps: Vec<ProjectiveMap> = Vec::new();
        let mut labels: Vec<String> = Vec::new();
        let mut inverse_of: Vec<Option<usize>> = Vec::new();
        for (label, g) in generators {
            if g.dim() != n {
                return Err(GeomError::DimensionMismatch { expected: n, got: g.dim() });
            }
            let idx = maps.len();
            let inv = g.inverse();
            let partner = maps.iter().position(|m| same_element(m, &inv));
            maps.push(g.clone());
            labels.push(label);
            match partner {
                Some(j) => {
                    inverse_of.push(Some(j));
                    inverse_of[j] = Some(idx);
                }
                None if same_element(&g, &inv) => inverse_of.push(Some(idx)),
                None => inverse_of.push(None),
            }
        }
        let given = maps.len();
        for i in 0..given {
            if inverse_of[i].is_none() {
                let idx = maps.len();
                maps.push(maps[i].inverse());
                labels.push(inverse_label(&labels[i]));
                inverse_of.push(Some(i));
                inverse_of[i] = Some(idx);
            }
        }
        let inverse_of: Vec<usize> = inverse_of.into_iter().map(|i| i.expect("paired")).collect();
        for (i, &j) in inverse_of.iter().enumerate() {
            let prod = maps[i].matrix() * maps[j].matrix();
            let id = Matrix::identity(n, n);
            let scale = prod[(0, 0)].signum() * prod.amax();
            if (prod / scale - id).amax() > 1e-10 {
                return Err(GeomError::Fixture(format!("generator {} has an inconsistent inverse", labels[i])));
            }
        }
        Ok(Self { generators: maps, labels, inverse_of, free })
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn generators(&self) -> &[ProjectiveMap] {
        &self.generators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn inverse_index(&self, i: usize) -> usize {
        self.inverse_of[i]
    }

    pub fn is_free(&self) -> bool {
        self.free
    }

    /// Product of the generators along a word.
    pub fn evaluate(&self, word: &[u16]) -> ProjectiveMap {
        word.iter().fold(ProjectiveMap::identity(self.dim()), |acc, &i| acc.compose(&self.generators[i as usize]))
    }

    pub fn word_label(&self, word: &[u16]) -> String {
        if word.is_empty() {
            return "e".into();
        }
        word.iter().map(|&i| self.labels[i as usize].as_str()).collect()
    }

    /// Freely reduces a word (cancels `s s⁻¹`).
    pub fn reduce(&self, word: &[u16]) -> Vec<u16> {
        let mut out: Vec<u16> = Vec::with_capacity(word.len());
        for &w in word {
            if out.last().is_some_and(|&l| self.inverse_of[l as usize] == w as usize) {
                out.pop();
            } else {
                out.push(w);
            }
        }
        out
    }

    pub fn inverse_word(&self, word: &[u16]) -> Vec<u16> {
        word.iter().rev().map(|&i| self.inverse_of[i as usize] as u16).collect()
    }
}

fn inverse_label(label: &str) -> String {
    let mut chars = label.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_lowercase() => c.to_uppercase().collect(),
        (Some(c), None) if c.is_uppercase() => c.to_lowercase().collect(),
        _ => format!("({label})^-1"),
    }
}

/// Equality modulo `±1` of `|det| = 1` representatives, checked on the
/// matrix and on its inverse, each relative to its largest entry.
///
/// Normalizing by the largest entry alone would not do: far elements converge
/// to rank-one matrices, and the data separating them lives in directions the
/// matrix contracts. Every direction is expanded by `g` or by `g⁻¹`.
fn same_matrices(a: (&Matrix, &Matrix), b: (&Matrix, &Matrix)) -> bool {
    let close = |x: &Matrix, y: &Matrix, sign: f64| {
        let tol = DEDUP_TOL * x.amax().max(y.amax());
        x.iter().zip(y.iter()).all(|(p, q)| (p - sign * q).abs() < tol)
    };
    [1.0, -1.0].iter().any(|&sg| close(a.0, b.0, sg) && close(a.1, b.1, sg))
}

fn same_element(a: &ProjectiveMap, b: &ProjectiveMap) -> bool {
    same_matrices((a.matrix(), a.inverse_matrix()), (b.matrix(), b.inverse_matrix()))
}

/// A word together with its matrix.
#[derive(Clone, Debug)]
pub struct GroupElement {
    pub word: Vec<u16>,
    pub map: ProjectiveMap,
}

impl GroupElement {
    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn ell(&self) -> Result<f64> {
        Ok(self.map.spectral()?.ell)
    }
}

/// Deduplicated word-metric ball, in BFS order (identity first).
#[derive(Clone, Debug)]
pub struct WordBall {
    pub depth: usize,
    pub elements: Vec<GroupElement>,
    /// `layer_start[k]` is the index of the first element of word length `k`;
    /// has `depth + 2` entries.
    pub layer_start: Vec<usize>,
}

impl WordBall {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Elements of word length exactly `k`.
    pub fn layer(&self, k: usize) -> &[GroupElement] {
        &self.elements[self.layer_start[k]..self.layer_start[k + 1]]
    }
}

/// Hash on `log ‖g‖_F` of the `|det| = 1` representative.
struct Dedup {
    buckets: HashMap<i64, Vec<usize>>,
    maps: Vec<ProjectiveMap>,
}

impl Dedup {
    fn new() -> Self {
        Self { buckets: HashMap::new(), maps: Vec::new() }
    }

    /// Index of an existing equal element, or registers `g` under `idx`.
    fn insert(&mut self, g: &ProjectiveMap, idx: usize) -> Option<usize> {
        let b = (g.matrix().norm().ln() / BUCKET_WIDTH).floor() as i64;
        for bb in [b - 1, b, b + 1] {
            if let Some(list) = self.buckets.get(&bb) {
                if let Some(&j) = list.iter().find(|&&j| same_element(&self.maps[j], g)) {
                    return Some(j);
                }
            }
        }
        debug_assert_eq!(idx, self.maps.len());
        self.maps.push(g.clone());
        self.buckets.entry(b).or_default().push(idx);
        None
    }
}

/// All distinct elements of word length `≤ depth`, each stored once with a
/// shortest freely reduced word.
pub fn enumerate_ball(gamma: &GroupPresentation, depth: usize) -> Result<WordBall> {
    enumerate_ball_capped(gamma, depth, DEFAULT_ELEMENT_CAP)
}

pub fn enumerate_ball_capped(gamma: &GroupPresentation, depth: usize, cap: usize) -> Result<WordBall> {
    let n = gamma.dim();
    let mut dedup = Dedup::new();
    let id = GroupElement { word: Vec::new(), map: ProjectiveMap::identity(n) };
    dedup.insert(&id.map, 0);
    let mut elements = vec![id];
    let mut layer_start = vec![0, 1];
    for _ in 1..=depth {
        let lo = layer_start[layer_start.len() - 2];
        let hi = layer_start[layer_start.len() - 1];
        let ngen = gamma.generators.len();
        let candidates: Vec<(Vec<u16>, ProjectiveMap)> = (lo..hi)
            .into_par_iter()
            .flat_map_iter(|i| {
                let parent = &elements[i];
                (0..ngen).filter_map(move |j| {
                    if parent.word.last().is_some_and(|&l| gamma.inverse_of[l as usize] == j) {
                        return None;
                    }
                    let map = parent.map.compose(&gamma.generators[j]);
                    let mut word = parent.word.clone();
                    word.push(j as u16);
                    Some((word, map))
                })
            })
            .collect();
        for (word, map) in candidates {
            let idx = elements.len();
            if dedup.insert(&map, idx).is_none() {
                elements.push(GroupElement { word, map });
                if elements.len() > cap {
                    return Err(GeomError::ElementCap(cap));
                }
            }
        }
        layer_start.push(elements.len());
    }
    Ok(WordBall { depth, elements, layer_start })
}

/// A ball element with its orbit geometry.
#[derive(Clone, Debug)]
pub struct OrbitElement {
    pub element: GroupElement,
    /// `d_Ω(o, γo)`.
    pub distance: f64,
    pub kappa: f64,
    /// Boundary point hit by the ray from `o` through `γo`; `None` for `γo = o`.
    pub direction: Option<ProjectivePoint>,
}

/// Word ball with orbit distances from a basepoint.
#[derive(Clone, Debug)]
pub struct OrbitBall {
    pub basepoint: ProjectivePoint,
    pub depth: usize,
    pub elements: Vec<OrbitElement>,
    pub layer_start: Vec<usize>,
}

impl OrbitBall {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn max_distance(&self) -> f64 {
        self.elements.iter().map(|e| e.distance).fold(0.0, f64::max)
    }

    /// Radius below which the ball is taken to contain the full orbit: the
    /// smallest displacement among elements of maximal word length.
    pub fn completeness_radius(&self) -> f64 {
        self.outer_layer().iter().map(|e| e.distance).fold(f64::INFINITY, f64::min)
    }

    fn outer_layer(&self) -> &[OrbitElement] {
        let k = self.depth;
        &self.elements[self.layer_start[k]..self.layer_start[k + 1]]
    }

    /// Restriction to word length `≤ k`.
    pub fn truncate(&self, k: usize) -> OrbitBall {
        let k = k.min(self.depth);
        OrbitBall {
            basepoint: self.basepoint.clone(),
            depth: k,
            elements: self.elements[..self.layer_start[k + 1]].to_vec(),
            layer_start: self.layer_start[..k + 2].to_vec(),
        }
    }

    pub fn word_ball(&self) -> WordBall {
        WordBall {
            depth: self.depth,
            elements: self.elements.iter().map(|e| e.element.clone()).collect(),
            layer_start: self.layer_start.clone(),
        }
    }
}

/// `κ(g) = ½ log(μ₁/μ_n)` from the top singular values of `g` and `g⁻¹`.
pub fn kappa(g: &ProjectiveMap) -> f64 {
    let top = |m: &Matrix| m.clone().singular_values().max();
    0.5 * (top(g.matrix()) * top(g.inverse_matrix())).ln().max(0.0)
}

/// Samples on which generators are checked to preserve `Ω`.
fn automorphism_samples(domain: &ConvexDomain) -> Vec<ProjectivePoint> {
    let mut s = domain.sample_points(0.5);
    s.extend(domain.sample_points(2.0));
    s
}

/// Checks every generator against sample points of `Ω`.
pub fn check_automorphisms(gamma: &GroupPresentation, domain: &ConvexDomain) -> Result<()> {
    let samples = automorphism_samples(domain);
    for (g, label) in gamma.generators.iter().zip(&gamma.labels) {
        if g.dim() != domain.dim() {
            return Err(GeomError::DimensionMismatch { expected: domain.dim(), got: g.dim() });
        }
        if !domain.preserves(g, &samples) {
            return Err(GeomError::NotAutomorphism { label: label.clone() });
        }
    }
    Ok(())
}

/// Orbit ball of `o` at word depth `depth`.
pub fn orbit(gamma: &GroupPresentation, domain: &ConvexDomain, o: &ProjectivePoint, depth: usize) -> Result<OrbitBall> {
    check_automorphisms(gamma, domain)?;
    let ball = enumerate_ball(gamma, depth)?;
    orbit_of_ball(domain, o, ball)
}

pub fn orbit_of_ball(domain: &ConvexDomain, o: &ProjectivePoint, ball: WordBall) -> Result<OrbitBall> {
    if !domain.contains(o) {
        return Err(GeomError::NotInDomain { near_boundary: domain.membership(o).near_boundary });
    }
    let oh = domain.lift(o)?;
    let elements = ball
        .elements
        .into_par_iter()
        .map(|element| {
            let distance = domain.orbit_distance(o, &element.map)?;
            let kappa = kappa(&element.map);
            let direction = orbit_direction(domain, &oh, &element.map)?;
            Ok(OrbitElement { element, distance, kappa, direction })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OrbitBall { basepoint: o.clone(), depth: ball.depth, elements, layer_start: ball.layer_start })
}

fn orbit_direction(domain: &ConvexDomain, oh: &Vector, g: &ProjectiveMap) -> Result<Option<ProjectivePoint>> {
    let image = g.apply_vec(oh);
    let gh = domain.chart().lift(&image)?;
    let u = &gh - oh;
    if u.amax() < 1e-12 {
        return Ok(None);
    }
    let s = domain.exit_param(oh, &u)?;
    Ok(Some(ProjectivePoint::new(oh + u * s)?))
}

/// Slope estimate with its regression standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
}

/// Ordinary least squares of `ys` on `xs`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return Err(GeomError::InsufficientDepth(format!("{n} regression points")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(GeomError::InsufficientDepth("degenerate regression abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (n - 2) as f64 / sxx).sqrt();
    Ok(SlopeFit { slope, stderr, intercept })
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalExponent {
    pub delta_hat: f64,
    pub stderr: f64,
    /// Same fit with `κ(γ)` in place of `d(o, γo)`.
    pub kappa_delta: f64,
    pub kappa_stderr: f64,
    pub window: (f64, f64),
    pub kappa_window: (f64, f64),
}

const EXPONENT_GRID: usize = 64;

/// Growth rate of `N(r) = #{γ : d(o, γo) ≤ r}` by least squares of `log N`
/// against `r` on `[r_c/2, r_c − 1]`, `r_c` the completeness radius.
pub fn critical_exponent(ball: &OrbitBall) -> Result<CriticalExponent> {
    if ball.is_empty() {
        return Err(GeomError::Empty("orbit ball"));
    }
    if ball.max_distance() < 5.0 {
        return Err(GeomError::InsufficientDepth(format!("max distance {:.3} < 5", ball.max_distance())));
    }
    let dist: Vec<f64> = ball.elements.iter().map(|e| e.distance).collect();
    let rc = ball.completeness_radius();
    let (fit, window) = growth_fit(dist, rc)?;
    let kap: Vec<f64> = ball.elements.iter().map(|e| e.kappa).collect();
    let rk = ball.outer_layer().iter().map(|e| e.kappa).fold(f64::INFINITY, f64::min);
    let (kfit, kwindow) = growth_fit(kap, rk)?;
    Ok(CriticalExponent {
        delta_hat: fit.slope,
        stderr: fit.stderr,
        kappa_delta: kfit.slope,
        kappa_stderr: kfit.stderr,
        window,
        kappa_window: kwindow,
    })
}

fn growth_fit(mut values: Vec<f64>, rc: f64) -> Result<(SlopeFit, (f64, f64))> {
    let (lo, hi) = (rc / 2.0, rc - 1.0);
    if !(hi - lo >= 1.0) {
        return Err(GeomError::InsufficientDepth(format!("completeness radius {rc:.3} too small")));
    }
    values.sort_by(f64::total_cmp);
    let xs: Vec<f64> = (0..EXPONENT_GRID).map(|k| lo + (hi - lo) * k as f64 / (EXPONENT_GRID - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&r| (values.partition_point(|&d| d <= r) as f64).ln()).collect();
    Ok((ols(&xs, &ys)?, (lo, hi)))
}

/// `Σ_{γ ∈ ball} e^{−s d(o, γo)}`.
pub fn poincare_series(ball: &OrbitBall, s: f64) -> f64 {
    let mut d: Vec<f64> = ball.elements.iter().map(|e| e.distance).collect();
    // Smallest terms first.
    d.sort_by(|a, b| b.total_cmp(a));
    d.iter().map(|&x| (-s * x).exp()).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceReport {
    pub s: f64,
    pub depths: Vec<usize>,
    pub partial_sums: Vec<f64>,
    /// True when partial sums increase and the last increment is at least half
    /// the first (no flattening).
    pub divergence_consistent: bool,
}

/// Partial Poincaré sums at exponent `s` over nested word balls.
pub fn divergence_diagnostic(ball: &OrbitBall, s: f64, depths: &[usize]) -> DivergenceReport {
    let depths: Vec<usize> = depths.iter().copied().filter(|&k| k <= ball.depth).collect();
    let partial_sums: Vec<f64> = depths.iter().map(|&k| poincare_series(&ball.truncate(k), s)).collect();
    let inc: Vec<f64> = partial_sums.windows(2).map(|w| w[1] - w[0]).collect();
    let divergence_consistent =
        !inc.is_empty() && inc.iter().all(|&x| x > 0.0) && inc[inc.len() - 1] >= 0.5 * inc[0];
    DivergenceReport { s, depths, partial_sums, divergence_consistent }
}

/// Default nested depths `{L − 4, L − 2, L}`.
pub fn default_divergence_depths(depth: usize) -> Vec<usize> {
    [depth.saturating_sub(4), depth.saturating_sub(2), depth].to_vec()
}

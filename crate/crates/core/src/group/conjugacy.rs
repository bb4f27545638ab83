use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{ols, GroupElement, GroupPresentation, SlopeFit, WordBall};
use crate::domain::{ConvexDomain, SplDistance};
use crate::error::{GeomError, Result};
use crate::projective::{Matrix, ProjectiveMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    RankOne,
    BiproximalNotRankOne,
    Singular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjStrategy {
    /// Exact for free groups: cyclic reduction plus rotation.
    FreeCyclic,
    /// Heuristic: merge elements with equal characteristic polynomial.
    CharpolyMerge,
}

#[derive(Clone, Debug)]
pub struct ConjClass {
    pub representative: GroupElement,
    pub ell: f64,
    pub kind: ClassKind,
    /// Number of ball elements found in the class.
    pub multiplicity: usize,
}

#[derive(Clone, Debug)]
pub struct ClassCensus {
    pub strategy: ConjStrategy,
    /// False for the charpoly heuristic.
    pub exact: bool,
    pub classes: Vec<ConjClass>,
    /// Translation length below which the census is taken to be complete.
    pub horizon: f64,
}

/// Rank-one classification through the simplicial distance of the fixed
/// points, with the boundary flags as fallback.
pub fn classify_element(domain: &ConvexDomain, g: &ProjectiveMap) -> Result<ClassKind> {
    let spec = g.spectral()?;
    if !spec.biproximal || spec.ell < 1e-9 {
        return Ok(ClassKind::Singular);
    }
    let (Some(xp), Some(xm)) = (&spec.x_plus, &spec.x_minus) else {
        return Ok(ClassKind::Singular);
    };
    let kind = match domain.simplicial_distance(xp, xm) {
        SplDistance::Infinite => ClassKind::RankOne,
        SplDistance::Finite(k) if k >= 3 => ClassKind::RankOne,
        SplDistance::Finite(_) => ClassKind::BiproximalNotRankOne,
        SplDistance::Unknown => {
            let a = domain.boundary_classify(xp);
            let b = domain.boundary_classify(xm);
            let flags = [a.smooth, a.strongly_extremal, b.smooth, b.strongly_extremal];
            if flags.iter().all(|f| *f == Some(true)) {
                ClassKind::RankOne
            } else {
                // Unknown flags never certify rank one.
                ClassKind::BiproximalNotRankOne
            }
        }
    };
    Ok(kind)
}

/// Conjugacy classes met by the ball.
pub fn conjugacy_classes(
    gamma: &GroupPresentation,
    domain: &ConvexDomain,
    ball: &WordBall,
    strategy: ConjStrategy,
) -> Result<ClassCensus> {
    match strategy {
        ConjStrategy::FreeCyclic => free_cyclic(gamma, domain, ball),
        ConjStrategy::CharpolyMerge => charpoly_merge(domain, ball),
    }
}

/// Cyclically reduced form of a freely reduced word.
pub(crate) fn cyclic_reduce(gamma: &GroupPresentation, word: &[u16]) -> Vec<u16> {
    let w = gamma.reduce(word);
    let (mut i, mut j) = (0usize, w.len());
    while j - i >= 2 && gamma.inverse_index(w[i] as usize) == w[j - 1] as usize {
        i += 1;
        j -= 1;
    }
    w[i..j].to_vec()
}

/// Lexicographically least rotation.
pub(crate) fn min_rotation(w: &[u16]) -> Vec<u16> {
    let n = w.len();
    (0..n.max(1))
        .map(|r| w[r.min(n)..].iter().chain(&w[..r.min(n)]).copied().collect::<Vec<u16>>())
        .min()
        .unwrap_or_default()
}

/// Canonical key of the conjugacy class of a word in a free group.
pub fn cyclic_key(gamma: &GroupPresentation, word: &[u16]) -> Vec<u16> {
    min_rotation(&cyclic_reduce(gamma, word))
}

fn free_cyclic(gamma: &GroupPresentation, domain: &ConvexDomain, ball: &WordBall) -> Result<ClassCensus> {
    if !gamma.is_free() {
        return Err(GeomError::Precondition("free_cyclic requires a group flagged free".into()));
    }
    let mut counts: BTreeMap<Vec<u16>, usize> = BTreeMap::new();
    for e in &ball.elements {
        *counts.entry(cyclic_key(gamma, &e.word)).or_default() += 1;
    }
    let classes = counts
        .into_par_iter()
        .map(|(key, multiplicity)| {
            let map = gamma.evaluate(&key);
            let ell = map.spectral()?.ell;
            let kind = classify_element(domain, &map)?;
            Ok(ConjClass { representative: GroupElement { word: key, map }, ell, kind, multiplicity })
        })
        .collect::<Result<Vec<_>>>()?;
    let horizon = classes
        .iter()
        .filter(|c| c.representative.len() == ball.depth)
        .map(|c| c.ell)
        .fold(f64::INFINITY, f64::min);
    Ok(ClassCensus { strategy: ConjStrategy::FreeCyclic, exact: true, classes, horizon })
}

/// Faddeev–LeVerrier coefficients `c_1 … c_n` of `det(tI − M)`.
fn faddeev_leverrier(m: &Matrix) -> Vec<f64> {
    let n = m.nrows();
    let mut mk = Matrix::identity(n, n);
    let mut c = Vec::with_capacity(n);
    for k in 1..=n {
        let am = m * &mk;
        let ck = -am.trace() / k as f64;
        c.push(ck);
        mk = am + Matrix::identity(n, n) * ck;
    }
    c
}

/// Coefficients `c_1 … c_n` of `det(tI − M) = tⁿ + c_1 tⁿ⁻¹ + … + c_n` for the
/// stored `|det| = 1` matrix, with the scalar `±1` fixed.
///
/// The recursion loses `c_k` to cancellation once `k > n/2` on far elements;
/// those come from `M⁻¹` through `c_k(M) = det(−M) c_{n−k}(M⁻¹)`.
fn charpoly(g: &ProjectiveMap) -> Vec<f64> {
    let n = g.dim();
    let fwd = faddeev_leverrier(g.matrix());
    let bwd = faddeev_leverrier(g.inverse_matrix());
    let det_neg = if n % 2 == 0 { g.det_sign() } else { -g.det_sign() };
    let mut c: Vec<f64> = (1..=n)
        .map(|k| match k {
            k if 2 * k <= n => fwd[k - 1],
            k if k == n => det_neg,
            k => det_neg * bwd[n - k - 1],
        })
        .collect();
    // M ↦ −M flips the sign of the odd-index coefficients.
    let flip = c.iter().step_by(2).find(|x| x.abs() > 1e-9).is_some_and(|&x| x < 0.0);
    if flip {
        for (i, x) in c.iter_mut().enumerate() {
            if i % 2 == 0 {
                *x = -*x;
            }
        }
    }
    c
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}

fn charpoly_merge(domain: &ConvexDomain, ball: &WordBall) -> Result<ClassCensus> {
    let mut rows: Vec<(Vec<f64>, f64, usize)> = ball
        .elements
        .par_iter()
        .enumerate()
        .map(|(i, e)| Ok((charpoly(&e.map), e.map.spectral()?.ell, i)))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.2.cmp(&b.2)));
    // Sweep in trace order; each open group keeps its first member's data.
    let mut groups: Vec<(Vec<f64>, f64, usize, usize)> = Vec::new();
    let mut open_from = 0usize;
    for (cp, ell, idx) in rows {
        while open_from < groups.len() && !close(groups[open_from].0[0], cp[0]) && groups[open_from].0[0] < cp[0] {
            open_from += 1;
        }
        let hit = groups[open_from..]
            .iter_mut()
            .find(|g| close(g.1, ell) && g.0.iter().zip(&cp).all(|(a, b)| close(*a, *b)));
        match hit {
            Some(g) => {
                g.3 += 1;
                // Keep the shortest word as representative.
                g.2 = g.2.min(idx);
            }
            None => groups.push((cp, ell, idx, 1)),
        }
    }
    let classes = groups
        .into_par_iter()
        .map(|(_, ell, idx, multiplicity)| {
            let rep = ball.elements[idx].clone();
            let kind = classify_element(domain, &rep.map)?;
            Ok(ConjClass { representative: rep, ell, kind, multiplicity })
        })
        .collect::<Result<Vec<_>>>()?;
    let horizon = ball.layer(ball.depth).iter().filter_map(|e| e.ell().ok()).fold(f64::INFINITY, f64::min);
    Ok(ClassCensus { strategy: ConjStrategy::CharpolyMerge, exact: false, classes, horizon })
}

#[derive(Clone, Debug, Serialize)]
pub struct CountRow {
    pub t: f64,
    pub total: usize,
    pub rank_one: usize,
    pub singular: usize,
    pub biproximal_not_rank_one: usize,
    /// `T · #[Γ]_T · e^{−δ̂T}`.
    pub normalized_stat: f64,
}

/// Slack on `ℓ ≤ T` so that `ℓ(gⁿ) = n ℓ(g)` is not lost to rounding.
const COUNT_SLACK: f64 = 1e-9;

/// Cumulative class counts `#{[γ] : ℓ(γ) ≤ T}` per threshold.
pub fn count_table(classes: &[ConjClass], t_grid: &[f64], delta_hat: f64) -> Vec<CountRow> {
    t_grid
        .iter()
        .map(|&t| {
            let (mut r1, mut sing, mut bnr) = (0, 0, 0);
            for c in classes.iter().filter(|c| c.ell <= t + COUNT_SLACK) {
                match c.kind {
                    ClassKind::RankOne => r1 += 1,
                    ClassKind::Singular => sing += 1,
                    ClassKind::BiproximalNotRankOne => bnr += 1,
                }
            }
            let total = r1 + sing + bnr;
            CountRow {
                t,
                total,
                rank_one: r1,
                singular: sing,
                biproximal_not_rank_one: bnr,
                normalized_stat: t * total as f64 * (-delta_hat * t).exp(),
            }
        })
        .collect()
}

/// Exponential rate of the class count, fitted as the slope of
/// `log(T · #[Γ]_T)` against `T` on `[t_lo, t_hi]`.
pub fn counting_rate(classes: &[ConjClass], t_lo: f64, t_hi: f64) -> Result<SlopeFit> {
    let grid: Vec<f64> = (0..48).map(|k| t_lo + (t_hi - t_lo) * k as f64 / 47.0).collect();
    let mut ells: Vec<f64> = classes.iter().map(|c| c.ell).collect();
    ells.sort_by(f64::total_cmp);
    let ys: Vec<f64> =
        grid.iter().map(|&t| (t * ells.partition_point(|&l| l <= t + COUNT_SLACK) as f64).ln()).collect();
    ols(&grid, &ys)
}

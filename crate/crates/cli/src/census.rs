use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use hilbertflow::group::{
    counting_rate, critical_exponent, ClassCensus, default_divergence_depths, divergence_diagnostic, orbit, CriticalExponent, DivergenceReport,
    SlopeFit,
};
use hilbertflow::{conjugacy_classes, count_table, ClassKind, ConjStrategy, OrbitBall};
use serde::Serialize;

use crate::{fmt, load_fixture, Outputs, RunConfig};

/// Lower end of the counting-rate fit.
pub const RATE_T_MIN: f64 = 3.0;

#[derive(Serialize)]
struct DeltaReport {
    fixture: String,
    depth: usize,
    elements: usize,
    completeness_radius: f64,
    #[serde(flatten)]
    exponent: Option<CriticalExponent>,
    /// Why `δ̂` is missing.
    exponent_error: Option<String>,
    divergence: Option<DivergenceReport>,
    counting_rate: Option<RateReport>,
}

#[derive(Serialize)]
struct RateReport {
    t_lo: f64,
    t_hi: f64,
    #[serde(flatten)]
    fit: SlopeFit,
}

#[derive(Serialize)]
struct ClassSummary {
    strategy: ConjStrategy,
    exact: bool,
    /// Translation length up to which the census is complete.
    horizon: f64,
    classes: usize,
    /// Class counts by kind with `ℓ ≤ horizon`.
    by_kind: BTreeMap<String, usize>,
}

/// Everything the census writes, also used by `sample`.
pub(crate) struct Census {
    pub ball: OrbitBall,
    pub exponent: Result<CriticalExponent, String>,
    pub classes: ClassCensus,
}

pub(crate) fn compute(config: &RunConfig, f: &hilbertflow::group::Fixture) -> Result<Census> {
    let depth = config.depth_or_default();
    let ball = orbit(&f.presentation, &f.domain, &f.basepoint, depth)?;
    let exponent = critical_exponent(&ball).map_err(|e| e.to_string());
    let strategy = if f.presentation.is_free() { ConjStrategy::FreeCyclic } else { ConjStrategy::CharpolyMerge };
    let classes = conjugacy_classes(&f.presentation, &f.domain, &ball.word_ball(), strategy)?;
    Ok(Census { ball, exponent, classes })
}

/// Steps of 0.5 up to the census horizon.
fn default_t_grid(horizon: f64) -> Vec<f64> {
    let top = if horizon.is_finite() { (2.0 * horizon).floor() as usize } else { 0 };
    (1..=top.max(1)).map(|k| 0.5 * k as f64).collect()
}

/// Writes `census.csv`, `delta.json`, `classification.json` and `classes.csv`.
pub fn cmd_census(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let f = load_fixture(config)?;
    let c = compute(config, &f)?;
    let delta_hat = c.exponent.as_ref().map_or(f64::NAN, |e| e.delta_hat);
    let t_grid = config.t_grid.clone().unwrap_or_else(|| default_t_grid(c.classes.horizon));
    let rows = count_table(&c.classes.classes, &t_grid, delta_hat);

    let mut out = Outputs::new(config)?;
    out.csv(
        "census.csv",
        &["T", "total", "rank_one", "biproximal_not_rank_one", "singular", "normalized_stat"],
        &rows
            .iter()
            .map(|r| {
                vec![
                    fmt(r.t),
                    r.total.to_string(),
                    r.rank_one.to_string(),
                    r.biproximal_not_rank_one.to_string(),
                    r.singular.to_string(),
                    fmt(r.normalized_stat),
                ]
            })
            .collect::<Vec<_>>(),
    )?;

    let t_hi = c.classes.horizon;
    let counting = (t_hi.is_finite() && t_hi >= RATE_T_MIN + 1.0)
        .then(|| counting_rate(&c.classes.classes, RATE_T_MIN, t_hi).ok())
        .flatten()
        .map(|fit| RateReport { t_lo: RATE_T_MIN, t_hi, fit });
    let depth = c.ball.depth;
    let report = DeltaReport {
        fixture: f.name.clone(),
        depth,
        elements: c.ball.len(),
        completeness_radius: c.ball.completeness_radius(),
        divergence: c
            .exponent
            .as_ref()
            .ok()
            .map(|e| divergence_diagnostic(&c.ball, e.delta_hat, &default_divergence_depths(depth))),
        exponent: c.exponent.clone().ok(),
        exponent_error: c.exponent.clone().err(),
        counting_rate: counting,
    };
    out.json("delta.json", &report)?;

    let kind_name = |k: ClassKind| serde_json::to_value(k).unwrap().as_str().unwrap().to_string();
    let mut by_kind: BTreeMap<String, usize> =
        [ClassKind::RankOne, ClassKind::BiproximalNotRankOne, ClassKind::Singular].map(|k| (kind_name(k), 0)).into();
    for cl in c.classes.classes.iter().filter(|cl| cl.ell <= c.classes.horizon) {
        *by_kind.get_mut(&kind_name(cl.kind)).unwrap() += 1;
    }
    out.json(
        "classification.json",
        &ClassSummary {
            strategy: c.classes.strategy,
            exact: c.classes.exact,
            horizon: c.classes.horizon,
            classes: c.classes.classes.len(),
            by_kind,
        },
    )?;
    out.csv(
        "classes.csv",
        &["word", "ell", "kind", "multiplicity"],
        &c.classes
            .classes
            .iter()
            .map(|cl| {
                vec![
                    f.presentation.word_label(&cl.representative.word),
                    fmt(cl.ell),
                    kind_name(cl.kind),
                    cl.multiplicity.to_string(),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    Ok(out.written)
}

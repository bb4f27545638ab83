use std::path::PathBuf;

use anyhow::{anyhow, Result};
use hilbertflow::density::{
    bm_sampler, default_exponent, equidistribution_report, mixing_correlation, quotient_samples, EquidistributionRow,
    MixingPoint, Observable,
};
use hilbertflow::group::{OrbitBall, Reducer};
use hilbertflow::{build_density, ClassKind};
use serde::Serialize;

use crate::census::compute;
use crate::{chart, fmt, load_fixture, Outputs, RunConfig};

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_MIXING_TIME: f64 = 6.0;
pub const MIXING_STEP: f64 = 0.5;
/// Longest flow step between reductions into the Dirichlet domain.
pub const FLOW_STEP: f64 = 0.25;
pub const AVERAGE_POINTS: usize = 256;

/// Largest generator displacement `max d(o, s o)`.
pub fn generator_scale(ball: &OrbitBall) -> f64 {
    let hi = ball.layer_start.get(2).copied().unwrap_or(ball.elements.len());
    ball.elements[ball.layer_start[1].min(hi)..hi].iter().map(|e| e.distance).fold(0.0, f64::max)
}

/// Observables scaled to the fixture: a ball for mixing, and a smooth bump
/// plus the ball for equidistribution.
pub fn default_observables(scale: f64) -> (Observable, Vec<Observable>) {
    let ball = Observable::Ball { r: 0.3 * scale };
    (ball, vec![Observable::SmoothBall { r: 0.4 * scale }, ball])
}

/// `horizon − 3, …, horizon` in unit steps, keeping thresholds with at least
/// five rank-one classes.
pub fn default_equidistribution_grid(ells: &[f64], horizon: f64) -> Vec<f64> {
    (0..4)
        .map(|k| horizon - 3.0 + k as f64)
        .filter(|&t| t > 0.0 && ells.iter().filter(|&&l| l <= t).count() >= 5)
        .collect()
}

#[derive(Serialize)]
struct SampleRecord {
    xi: Vec<f64>,
    eta: Vec<f64>,
    t: f64,
    weight: f64,
}

#[derive(Serialize)]
struct SampleSummary {
    fixture: String,
    delta_hat: f64,
    s: f64,
    atoms: usize,
    samples: usize,
    window: f64,
    exhaustive: bool,
    effective_size: f64,
    excluded_pairs: usize,
    quotient_samples: usize,
    /// `1/Σw²` over the quotient samples; the raw set's ESS is small because
    /// pairs far from `o` carry large Gromov factors.
    quotient_effective_size: f64,
    reducer_moves: usize,
    mixing_observable: Option<Observable>,
    mixing_error: Option<String>,
    equidistribution_grid: Vec<f64>,
    equidistribution_error: Option<String>,
}

/// Writes `samples.jsonl`, `mixing_curve.csv`, `equidistribution.csv` and
/// `sample_summary.json`.
pub fn cmd_sample(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let f = load_fixture(config)?;
    let c = compute(config, &f)?;
    let delta_hat = c.exponent.as_ref().map_err(|e| anyhow!("critical exponent: {e}"))?.delta_hat;
    let nu = build_density(&c.ball, default_exponent(delta_hat, c.ball.depth))?;
    let scale = generator_scale(&c.ball);
    let window = 3.0 * scale;
    let n = config.samples.unwrap_or(DEFAULT_SAMPLES);
    let mut rng = config.rng();
    let set = bm_sampler(&f.domain, &nu, delta_hat, n, window, &mut rng)?;

    let mut out = Outputs::new(config)?;
    let records = set
        .samples
        .iter()
        .map(|s| {
            Ok(SampleRecord {
                xi: chart(&f, &nu.atoms[s.xi].direction)?,
                eta: chart(&f, &nu.atoms[s.eta].direction)?,
                t: s.t,
                weight: s.weight,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.jsonl("samples.jsonl", records)?;

    let reducer = Reducer::from_ball(&c.ball)?;
    let quotient = if set.samples.is_empty() { Ok(Vec::new()) } else { quotient_samples(&f.domain, &nu, &set, &reducer) };
    let (a, equi_obs) = default_observables(scale);

    let t_max = config.time.unwrap_or(DEFAULT_MIXING_TIME);
    let steps = (t_max / MIXING_STEP).round() as usize;
    let t_grid: Vec<f64> = (0..=steps).map(|k| k as f64 * MIXING_STEP).collect();
    let mixing: Result<Vec<MixingPoint>> = match &quotient {
        Ok(q) if !q.is_empty() => mixing_correlation(&f.domain, &reducer, q, a, a, &t_grid, FLOW_STEP).map_err(Into::into),
        Ok(_) => Err(anyhow!("no samples")),
        Err(e) => Err(anyhow!("{e}")),
    };
    out.csv(
        "mixing_curve.csv",
        &["t", "correlation", "stderr", "discrepancy", "mass_a", "mass_b"],
        &mixing
            .as_deref()
            .unwrap_or_default()
            .iter()
            .map(|p| {
                vec![fmt(p.t), fmt(p.correlation), fmt(p.stderr), fmt(p.discrepancy()), fmt(p.mass_a), fmt(p.mass_b)]
            })
            .collect::<Vec<_>>(),
    )?;

    let rank_one: Vec<f64> =
        c.classes.classes.iter().filter(|cl| cl.kind == ClassKind::RankOne).map(|cl| cl.ell).collect();
    let grid = config.t_grid.clone().unwrap_or_else(|| default_equidistribution_grid(&rank_one, c.classes.horizon));
    let equi: Result<Vec<EquidistributionRow>> = match &quotient {
        Ok(q) if !q.is_empty() && !grid.is_empty() => {
            equidistribution_report(&f.domain, &reducer, &c.classes.classes, q, &grid, &equi_obs, AVERAGE_POINTS)
                .map_err(Into::into)
        }
        Ok(q) if q.is_empty() => Err(anyhow!("no samples")),
        Ok(_) => Err(anyhow!("fewer than 5 rank-one classes below the census horizon")),
        Err(e) => Err(anyhow!("{e}")),
    };
    out.csv(
        "equidistribution.csv",
        &["observable", "T", "classes", "class_mean", "class_stderr", "bm_mean", "bm_stderr", "discrepancy"],
        &equi
            .as_deref()
            .unwrap_or_default()
            .iter()
            .map(|r| {
                vec![
                    r.observable.clone(),
                    fmt(r.t),
                    r.classes.to_string(),
                    fmt(r.class_mean),
                    fmt(r.class_stderr),
                    fmt(r.bm_mean),
                    fmt(r.bm_stderr),
                    fmt(r.discrepancy),
                ]
            })
            .collect::<Vec<_>>(),
    )?;

    out.json(
        "sample_summary.json",
        &SampleSummary {
            fixture: f.name.clone(),
            delta_hat,
            s: nu.s,
            atoms: nu.atoms.len(),
            samples: set.samples.len(),
            window,
            exhaustive: set.exhaustive,
            effective_size: set.effective_size,
            excluded_pairs: set.excluded,
            quotient_samples: quotient.as_ref().map_or(0, Vec::len),
            quotient_effective_size: quotient
                .as_ref()
                .map_or(0.0, |q| 1.0 / q.iter().map(|w| w.weight * w.weight).sum::<f64>()),
            reducer_moves: reducer.moves.len(),
            mixing_observable: Some(a),
            mixing_error: mixing.as_ref().err().map(|e| e.to_string()),
            equidistribution_grid: grid,
            equidistribution_error: equi.as_ref().err().map(|e| e.to_string()),
        },
    )?;
    Ok(out.written)
}

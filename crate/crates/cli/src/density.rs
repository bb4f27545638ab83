use std::path::PathBuf;

use anyhow::{anyhow, Result};
use hilbertflow::density::{
    default_exponent, default_shadow_annulus, default_shadow_radius, equivariance_defect, shadow_lemma_report,
    EquivarianceDefect, ShadowReport,
};
use hilbertflow::group::{critical_exponent, orbit};
use hilbertflow::build_density;
use serde::Serialize;

use crate::{chart, fmt, load_fixture, Outputs, RunConfig};

#[derive(Serialize)]
struct AtomRecord {
    word: String,
    distance: f64,
    direction: Vec<f64>,
    weight: f64,
}

#[derive(Serialize)]
struct ShadowSummary {
    radius: f64,
    s: f64,
    annulus: (usize, usize),
    rows: usize,
    min_ratio: f64,
    max_ratio: f64,
    constant: f64,
    slope: f64,
    slope_stderr: f64,
}

impl From<&ShadowReport> for ShadowSummary {
    fn from(r: &ShadowReport) -> Self {
        Self {
            radius: r.radius,
            s: r.s,
            annulus: r.annulus,
            rows: r.rows.len(),
            min_ratio: r.min_ratio,
            max_ratio: r.max_ratio,
            constant: r.constant,
            slope: r.slope,
            slope_stderr: r.slope_stderr,
        }
    }
}

#[derive(Serialize)]
struct GeneratorDefect {
    generator: String,
    #[serde(flatten)]
    defect: EquivarianceDefect,
}

#[derive(Serialize)]
struct DensityReport {
    fixture: String,
    depth: usize,
    delta_hat: f64,
    s: f64,
    atoms: Vec<AtomRecord>,
    shadow: ShadowSummary,
    /// Same report at `s = δ̂/2`.
    shadow_subcritical: ShadowSummary,
    /// Per generator; empty unless the group is flagged free.
    equivariance: Vec<GeneratorDefect>,
}

/// Writes `density.json` and `shadow.csv`.
pub fn cmd_density(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let f = load_fixture(config)?;
    let depth = config.depth_or_default();
    let ball = orbit(&f.presentation, &f.domain, &f.basepoint, depth)?;
    let delta_hat = critical_exponent(&ball).map_err(|e| anyhow!("critical exponent: {e}"))?.delta_hat;
    let nu = build_density(&ball, default_exponent(delta_hat, depth))?;
    let radius = config.radius.unwrap_or_else(|| default_shadow_radius(&ball));
    let shadow = shadow_lemma_report(&f.domain, &nu, &ball, radius, delta_hat, default_shadow_annulus(depth))?;
    let sub = build_density(&ball, 0.5 * delta_hat)?;
    let shadow_sub = shadow_lemma_report(&f.domain, &sub, &ball, radius, delta_hat, default_shadow_annulus(depth))?;
    let equivariance = if f.presentation.is_free() {
        (0..f.presentation.generators().len())
            .map(|i| {
                Ok(GeneratorDefect {
                    generator: f.presentation.labels()[i].clone(),
                    defect: equivariance_defect(&f.domain, &f.presentation, &nu, &[i as u16])?,
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let mut out = Outputs::new(config)?;
    out.csv(
        "shadow.csv",
        &["word", "distance", "mass", "ratio"],
        &shadow
            .rows
            .iter()
            .map(|r| vec![f.presentation.word_label(&r.word), fmt(r.distance), fmt(r.mass), fmt(r.ratio)])
            .collect::<Vec<_>>(),
    )?;
    let atoms = nu
        .atoms
        .iter()
        .map(|a| {
            Ok(AtomRecord {
                word: f.presentation.word_label(&a.word),
                distance: a.distance,
                direction: chart(&f, &a.direction)?,
                weight: a.weight,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.json(
        "density.json",
        &DensityReport {
            fixture: f.name.clone(),
            depth,
            delta_hat,
            s: nu.s,
            atoms,
            shadow: (&shadow).into(),
            shadow_subcritical: (&shadow_sub).into(),
            equivariance,
        },
    )?;
    Ok(out.written)
}

use std::path::PathBuf;

use anyhow::{anyhow, Result};
use hilbertflow::density::{
    core_tangents, default_exponent, entropy_estimate, entropy_radius, sample_ball_tangents, EntropyEstimate,
    DEFAULT_ENTROPY_RADIUS,
};
use hilbertflow::group::{critical_exponent, orbit};
use hilbertflow::build_density;
use serde::Serialize;

use crate::{load_fixture, Outputs, RunConfig};

pub const DEFAULT_ENTROPY_SAMPLES: usize = 400_000;
pub const DEFAULT_ENTROPY_TIME: f64 = 8.0;

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum VectorSource {
    /// Uniform feet in `B(o, ρ)`, uniform directions.
    Ball,
    /// Chords between density atoms through `B(o, ρ)`.
    Core,
}

#[derive(Serialize)]
struct EntropyReport {
    fixture: String,
    delta_hat: f64,
    min_displacement: f64,
    vectors: VectorSource,
    #[serde(flatten)]
    estimate: EntropyEstimate,
}

/// Writes `entropy.json`.
///
/// Free groups are sampled on the core (their quotient has infinite volume
/// and most uniform vectors escape); other groups uniformly in the ball.
pub fn cmd_entropy(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let f = load_fixture(config)?;
    let depth = config.depth_or_default();
    let ball = orbit(&f.presentation, &f.domain, &f.basepoint, depth)?;
    let delta_hat = critical_exponent(&ball).map_err(|e| anyhow!("critical exponent: {e}"))?.delta_hat;
    let dmin = ball.elements.iter().skip(1).map(|e| e.distance).fold(f64::INFINITY, f64::min);
    let rho = entropy_radius(dmin, config.epsilon, DEFAULT_ENTROPY_RADIUS)?;
    let n = config.samples.unwrap_or(DEFAULT_ENTROPY_SAMPLES);
    let t = config.time.unwrap_or(DEFAULT_ENTROPY_TIME);
    let mut rng = config.rng();
    let (source, vectors) = if f.presentation.is_free() {
        let nu = build_density(&ball, default_exponent(delta_hat, depth))?;
        (VectorSource::Core, core_tangents(&f.domain, &nu, rho, n, &mut rng)?)
    } else {
        (VectorSource::Ball, sample_ball_tangents(&f.domain, &f.basepoint, rho, n, &mut rng)?)
    };
    let estimate = entropy_estimate(&f.domain, &f.basepoint, &vectors, t, config.epsilon, rho)?;
    let mut out = Outputs::new(config)?;
    out.json(
        "entropy.json",
        &EntropyReport { fixture: f.name.clone(), delta_hat, min_displacement: dmin, vectors: source, estimate },
    )?;
    Ok(out.written)
}

//! Batch pipelines behind the `hilbertflow` binary.
//!
//! Every command takes a [`RunConfig`], writes its files into the output
//! directory and returns their paths. Each file starts with a header carrying
//! the hash of the configuration that produced it: a `#` comment line for CSV,
//! a `config_hash` field for JSON, and a first header record for JSON-lines.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hilbertflow::group::Fixture;
use hilbertflow::ProjectivePoint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

mod census;
mod density;
mod entropy;
mod sample;
mod verify;

pub use census::cmd_census;
pub use density::cmd_density;
pub use entropy::cmd_entropy;
pub use sample::cmd_sample;
pub use verify::{cmd_verify, Invariant, VerifyReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Census,
    Verify,
    Sample,
    Density,
    Entropy,
}

/// Parameters of one run. Unset options fall back to per-fixture defaults.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    /// Builtin identifier or path to a JSON fixture.
    pub fixture: String,
    /// Word length `L` of the orbit ball.
    pub depth: Option<usize>,
    pub seed: u64,
    #[serde(skip)]
    pub out: PathBuf,
    /// Thresholds `T` for counting and equidistribution tables.
    pub t_grid: Option<Vec<f64>>,
    /// Shadow radius `R`.
    pub radius: Option<f64>,
    /// Separation scale for the entropy estimate.
    pub epsilon: f64,
    /// Flow time: entropy horizon, or the last mixing time.
    pub time: Option<f64>,
    /// Monte-Carlo sample count.
    pub samples: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command, fixture: &str, out: impl Into<PathBuf>) -> Self {
        Self {
            command,
            fixture: fixture.to_string(),
            depth: None,
            seed: 0,
            out: out.into(),
            t_grid: None,
            radius: None,
            epsilon: 0.3,
            time: None,
            samples: None,
        }
    }

    /// First 16 hex digits of the SHA-256 of the JSON-serialized config. The
    /// output directory is not part of it.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub(crate) fn fixture_kind(&self) -> &str {
        self.fixture.split(':').next().unwrap_or("")
    }

    /// Default depth per builtin: deep enough for the counting fits, small
    /// enough to run in seconds.
    pub fn depth_or_default(&self) -> usize {
        self.depth.unwrap_or(match self.fixture_kind() {
            "cyclic" => 150,
            "triangle-reflection" => 12,
            "simplex-lattice" => 16,
            "disk-schottky" => 8,
            _ => 6,
        })
    }
}

/// Loaded fixture with a parse error carrying the fixture name.
pub fn load_fixture(config: &RunConfig) -> Result<Fixture> {
    Fixture::load(&config.fixture).with_context(|| format!("loading fixture '{}'", config.fixture))
}

pub(crate) fn chart(f: &Fixture, p: &ProjectivePoint) -> Result<Vec<f64>> {
    Ok(f.domain.chart_coords(p)?)
}

/// Output sink that writes the config header first.
pub(crate) struct Outputs<'a> {
    config: &'a RunConfig,
    hash: String,
    pub written: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    pub fn new(config: &'a RunConfig) -> Result<Self> {
        fs::create_dir_all(&config.out).with_context(|| format!("creating {}", config.out.display()))?;
        Ok(Self { config, hash: config.hash(), written: Vec::new() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.config.out.join(name)
    }

    fn create(&mut self, name: &str) -> Result<std::io::BufWriter<fs::File>> {
        let p = self.path(name);
        let f = fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?;
        self.written.push(p);
        Ok(std::io::BufWriter::new(f))
    }

    pub fn csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = self.create(name)?;
        writeln!(w, "# hilbertflow config_hash={} command={} fixture={}", self.hash, self.command(), self.config.fixture)?;
        writeln!(w, "{}", columns.join(","))?;
        for r in rows {
            writeln!(w, "{}", r.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<()> {
        let mut value = serde_json::to_value(body)?;
        let header = self.header();
        if let serde_json::Value::Object(map) = &mut value {
            let mut with = serde_json::Map::new();
            with.insert("config_hash".into(), header["config_hash"].clone());
            with.insert("config".into(), header["config"].clone());
            with.extend(std::mem::take(map));
            value = serde_json::Value::Object(with);
        }
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// JSON-lines file whose first record is the header.
    pub fn jsonl<T: Serialize>(&mut self, name: &str, records: impl IntoIterator<Item = T>) -> Result<()> {
        let mut w = self.create(name)?;
        let mut header = self.header();
        header["header"] = true.into();
        serde_json::to_writer(&mut w, &header)?;
        writeln!(w)?;
        for r in records {
            serde_json::to_writer(&mut w, &r)?;
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    fn command(&self) -> String {
        serde_json::to_value(self.config.command).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
    }

    fn header(&self) -> serde_json::Value {
        serde_json::json!({ "config_hash": self.hash, "config": self.config })
    }
}

pub(crate) fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Lines of a CSV file after the header comment.
pub fn read_csv_body(path: &Path) -> Result<Vec<String>> {
    Ok(fs::read_to_string(path)?.lines().filter(|l| !l.starts_with('#')).map(String::from).collect())
}

/// Runs `config.command`.
pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>> {
    match config.command {
        Command::Census => cmd_census(config),
        Command::Verify => cmd_verify(config).map(|(paths, _)| paths),
        Command::Sample => cmd_sample(config),
        Command::Density => cmd_density(config),
        Command::Entropy => cmd_entropy(config),
    }
}

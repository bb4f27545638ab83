use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hilbertflow_cli::{run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "hilbertflow", version, about = "Orbit census, invariant checks, Bowen-Margulis sampling and entropy estimates")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Conjugacy-class counts, critical exponent and classification.
    Census(Opts),
    /// Residuals of the geometric identities, as JSON.
    Verify(Opts),
    /// Bowen-Margulis samples with mixing and equidistribution tables.
    Sample(Opts),
    /// Atomic conformal density and shadow-lemma report.
    Density(Opts),
    /// Separated-set entropy estimate.
    Entropy(Opts),
}

#[derive(Args)]
struct Opts {
    /// Builtin (disk-schottky, triangle-reflection, simplex-lattice, cyclic,
    /// with optional `:key=value,...`) or a JSON fixture path.
    #[arg(long, default_value = "disk-schottky")]
    fixture: String,
    /// Word length of the orbit ball.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated thresholds T.
    #[arg(long, value_delimiter = ',')]
    tgrid: Option<Vec<f64>>,
    /// Shadow radius R.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    /// Entropy time, or the last mixing time for `sample`.
    #[arg(long)]
    time: Option<f64>,
    /// Monte-Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, o) = match cli.command {
        Cmd::Census(o) => (Command::Census, o),
        Cmd::Verify(o) => (Command::Verify, o),
        Cmd::Sample(o) => (Command::Sample, o),
        Cmd::Density(o) => (Command::Density, o),
        Cmd::Entropy(o) => (Command::Entropy, o),
    };
    let config = RunConfig {
        command,
        fixture: o.fixture,
        depth: o.depth,
        seed: o.seed,
        out: o.out,
        t_grid: o.tgrid,
        radius: o.radius,
        epsilon: o.epsilon,
        time: o.time,
        samples: o.samples,
    };
    match run(&config) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("{}", serde_json::json!({ "error": chain.join(": "), "config_hash": config.hash() }));
            ExitCode::from(2)
        }
    }
}

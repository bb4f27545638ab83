use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use hilbertflow_cli::{cmd_census, cmd_sample, cmd_verify, read_csv_body, Command as Cmd, RunConfig};

fn config(cmd: Cmd, fixture: &str, out: &Path) -> RunConfig {
    RunConfig::new(cmd, fixture, out)
}

fn header_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn cyclic_census_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Cmd::Census, "cyclic:boost=1.0", dir.path());
    cfg.depth = Some(20);
    cmd_census(&cfg).unwrap();
    let body = read_csv_body(&dir.path().join("census.csv")).unwrap();
    assert_eq!(body[0], "T,total,rank_one,biproximal_not_rank_one,singular,normalized_stat");
    assert!(body.len() > 30);
    for line in &body[1..] {
        let f: Vec<&str> = line.split(',').collect();
        let t: f64 = f[0].parse().unwrap();
        assert_eq!(f[1].parse::<usize>().unwrap(), 2 * t.floor() as usize + 1, "{line}");
    }
}

#[test]
fn simplex_census_has_no_rank_one_classes() {
    let dir = tempfile::tempdir().unwrap();
    cmd_census(&config(Cmd::Census, "simplex-lattice", dir.path())).unwrap();
    for line in &read_csv_body(&dir.path().join("census.csv")).unwrap()[1..] {
        assert_eq!(line.split(',').nth(2), Some("0"), "{line}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("classification.json")).unwrap()).unwrap();
    assert_eq!(summary["by_kind"]["rank_one"], 0);
    assert_eq!(summary["exact"], false);
}

#[test]
fn every_output_carries_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Cmd::Census, "disk-schottky", dir.path());
    let hash = cfg.hash();
    for p in cmd_census(&cfg).unwrap() {
        if p.extension().unwrap() == "csv" {
            assert!(header_line(&p).contains(&format!("config_hash={hash}")));
        } else {
            let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
            assert_eq!(v["config_hash"], hash.as_str());
        }
    }
    let delta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("delta.json")).unwrap()).unwrap();
    assert!((delta["delta_hat"].as_f64().unwrap() - 0.75).abs() < 0.05);
    assert!(delta["stderr"].as_f64().unwrap() > 0.0);
    assert!(delta["divergence"]["partial_sums"].is_array());
}

#[test]
fn config_hash_tracks_the_seed_only_through_the_config() {
    let a = RunConfig::new(Cmd::Sample, "disk-schottky", "x");
    let mut b = RunConfig::new(Cmd::Sample, "disk-schottky", "y");
    assert_eq!(a.hash(), b.hash());
    b.seed = 1;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn verify_reports_named_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let (_, disk) = cmd_verify(&config(Cmd::Verify, "disk-schottky", dir.path())).unwrap();
    let by_name: HashMap<_, _> = disk.invariants.iter().map(|i| (i.name.as_str(), i)).collect();
    let period = by_name["period_identity"];
    assert!(period.pass && period.applicable && period.residual.unwrap() <= 1e-6);
    assert!(disk.pass);

    let (_, simplex) = cmd_verify(&config(Cmd::Verify, "simplex-lattice", dir.path())).unwrap();
    let c = simplex.invariants.iter().find(|i| i.name == "constant_displacement").unwrap();
    assert!(c.pass && c.samples > 0);
    assert!(simplex.pass);
}

#[test]
fn singular_fixture_is_a_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"generators": [{"label": "a", "matrix": [[1, 2, 0], [2, 4, 0], [0, 0, 1]]}], "free": true}"#)
        .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hilbertflow"))
        .args(["verify", "--fixture", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    let msg = err["error"].as_str().unwrap();
    assert!(msg.contains("generators[0].matrix") && msg.contains("singular"), "{msg}");
}

#[test]
fn zero_samples_give_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Cmd::Sample, "disk-schottky", dir.path());
    cfg.samples = Some(0);
    cmd_sample(&cfg).unwrap();
    let lines: Vec<String> =
        fs::read_to_string(dir.path().join("samples.jsonl")).unwrap().lines().map(String::from).collect();
    assert_eq!(lines.len(), 1);
    let header: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
    assert_eq!(header["header"], true);
    assert_eq!(header["config_hash"], cfg.hash().as_str());
    for name in ["mixing_curve.csv", "equidistribution.csv"] {
        assert_eq!(read_csv_body(&dir.path().join(name)).unwrap().len(), 1, "{name}");
    }
}

#[test]
fn sample_stream_is_flip_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Cmd::Sample, "disk-schottky", dir.path());
    cfg.depth = Some(5);
    cfg.samples = Some(4000);
    cmd_sample(&cfg).unwrap();
    let text = fs::read_to_string(dir.path().join("samples.jsonl")).unwrap();
    let mut mass: HashMap<String, f64> = HashMap::new();
    let key = |a: &serde_json::Value, b: &serde_json::Value| format!("{a}|{b}");
    for line in text.lines().skip(1) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        *mass.entry(key(&v["xi"], &v["eta"])).or_default() += v["weight"].as_f64().unwrap();
    }
    assert!(!mass.is_empty());
    for (k, w) in &mass {
        let (a, b) = k.split_once('|').unwrap();
        let flipped = mass.get(&format!("{b}|{a}")).copied().unwrap_or(0.0);
        assert!((w - flipped).abs() <= 1e-12 * w.max(1e-300).max(flipped), "{k}");
    }
}

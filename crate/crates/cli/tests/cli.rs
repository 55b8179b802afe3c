use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn sps(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sps"));
    cmd.args(args).env_remove("SPS_WORKERS");
    if let Some(w) = workers {
        cmd.env("SPS_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_with(sub: &str, config: &Value, workers: Option<&str>) -> (Output, TempDir) {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.json", config);
    let out = dir.path().join("out");
    let o = sps(&[sub, "--config", &cfg, "--out", out.to_str().unwrap()], workers);
    (o, dir)
}

fn csv(dir: &TempDir, name: &str) -> String {
    std::fs::read_to_string(dir.path().join("out").join(name)).unwrap()
}

fn small_gate() -> Value {
    json!({"epsilon0_over_tau": [0.0, 0.005, 0.01, 0.02, 0.05, 0.1], "random_inputs": 4})
}

#[test]
fn validate_passes_every_check() {
    let o = sps(&["validate"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    assert!(!text.contains("FAIL"));
}

#[test]
fn gate_table_has_the_documented_columns() {
    let (o, dir) = run_with("gate", &small_gate(), None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = csv(&dir, "gate.csv");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("epsilon0_over_tau,min_fidelity,visibility,worst_input"));
    assert_eq!(lines.next().unwrap().split(',').take(3).collect::<Vec<_>>(), ["0", "1", "1"]);
    assert_eq!(lines.count(), 5);
    assert!(String::from_utf8(o.stdout).unwrap().contains("0.99"));
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let (a, da) = run_with("gate", &small_gate(), Some("1"));
    let (b, db) = run_with("gate", &json!({"workers": 1, "epsilon0_over_tau": [0.0, 0.005, 0.01, 0.02, 0.05, 0.1], "random_inputs": 4}), Some("4"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(csv(&da, "gate.csv"), csv(&db, "gate.csv"));
}

#[test]
fn preset_defaults_match_the_spelled_out_config() {
    let values = json!([0.0, std::f64::consts::FRAC_PI_2]);
    let short = json!({"preset": "fig9", "sweep": {"values": values}});
    let mut full: Value = serde_json::from_str(sps_core::presets::builtin_json("fig9").unwrap()).unwrap();
    full["sweep"]["values"] = values;
    let (a, da) = run_with("sweep", &short, None);
    let (b, db) = run_with("sweep", &full, None);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(b.status.code(), Some(0), "{}", String::from_utf8_lossy(&b.stderr));
    let text = csv(&da, "fig9.csv");
    assert_eq!(text, csv(&db, "fig9.csv"));
    assert!(text.starts_with("theta [rad],indistinguishability,collection_efficiency"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn hbt_trace_is_symmetric() {
    let cfg = json!({"n_pulses": 2, "tau_step": 0.5, "t_points_per_period": 60});
    let (o, dir) = run_with("hbt", &cfg, None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = csv(&dir, "hbt.csv");
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (t, v) = l.split_once(',').unwrap();
            (t.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert!(text.starts_with("tau [1/Gamma_spon],coincidences\n"));
    let n = rows.len();
    assert_eq!(n % 2, 1);
    for k in 0..n / 2 {
        assert_eq!(rows[k].0, -rows[n - 1 - k].0);
        assert_eq!(rows[k].1, rows[n - 1 - k].1);
    }
}

#[test]
fn configuration_errors_exit_with_one() {
    let cases = [
        ("figure", json!({"preset": "fig9", "colour": "blue"})),
        ("figure", json!({"preset": "fig9", "params": {"kappa": -1.0}})),
        ("figure", json!({"preset": "fig99"})),
        ("figure", json!({})),
        ("gate", json!({"quadrature_nodes": 4})),
        ("gate", json!({"workers": 0})),
        ("hbt", json!({"period": "long"})),
    ];
    for (sub, cfg) in cases {
        let (o, _dir) = run_with(sub, &cfg, None);
        assert_eq!(o.status.code(), Some(1), "{sub} {cfg}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(sps(&["sweep"], None).status.code(), Some(1));
    assert_eq!(sps(&["figure", "--config", "/nonexistent/run.json"], None).status.code(), Some(1));
    assert_eq!(sps(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(sps(&["validate"], Some("many")).status.code(), Some(1));

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(sps(&["gate", "--config", path.to_str().unwrap()], None).status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_with_two() {
    let cfg = json!({"preset": "fig7", "sweep": {"values": [10.0]}, "calibration": {"range": [0.01, 0.02]}});
    let (o, _dir) = run_with("figure", &cfg, None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("F_P = 10"));
}

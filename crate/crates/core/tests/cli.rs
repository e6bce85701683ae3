mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::fixture;
use serde_json::Value;
use transim::data::{ModelBundle, Scenario};
use transim::simulator::simulate;

fn transim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transim")).args(args).output().expect("spawn transim")
}

fn ok(args: &[&str]) -> String {
    let out = transim(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scenario(name: &str) -> PathBuf {
    fixture(&format!("scenarios/{name}"))
}

fn build_bundle(dir: &Path) -> PathBuf {
    let b = dir.join("bundle.json");
    let steps = fixture("step_times.csv");
    let cluster = fixture("cluster_speeds.csv");
    let ckpt = fixture("checkpoints.csv");
    ok(&[
        "fit-speed",
        "--input",
        path(&steps),
        "--bundle",
        path(&b),
        "--seed",
        "1",
        "--cluster-speeds",
        path(&cluster),
    ]);
    ok(&["fit-checkpoint", "--input", path(&ckpt), "--bundle", path(&b), "--seed", "1"]);
    let (rev, st, rep) = (fixture("revocations.csv"), fixture("startups.csv"), fixture("replacement.csv"));
    ok(&[
        "build-revocation",
        "--input",
        path(&rev),
        "--startups",
        path(&st),
        "--replacement",
        path(&rep),
        "--bundle",
        path(&b),
    ]);
    b
}

#[test]
fn fit_speed_prints_each_variant() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("b.json");
    let out = ok(&["fit-speed", "--input", path(&fixture("step_times.csv")), "--bundle", path(&b), "--seed", "1"]);
    let header = out.lines().next().unwrap();
    for col in ["Model", "Input feature", "K-fold MAE", "Test MAE", "Test MAPE"] {
        assert!(header.contains(col), "{header}");
    }
    for label in ["Univariate, GPU-agnostic", "Multivariate, GPU-agnostic", "Univariate, K80", "SVR RBF Kernel, V100"] {
        assert!(out.contains(label), "missing {label}");
    }
    assert!(b.exists());
}

#[test]
fn bundles_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = std::fs::read(build_bundle(a.path())).unwrap();
    let second = std::fs::read(build_bundle(b.path())).unwrap();
    assert_eq!(first, second);
}

#[test]
fn empty_csv_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out =
        transim(&["fit-speed", "--input", path(&empty), "--bundle", path(&dir.path().join("b.json")), "--seed", "1"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("empty.csv:1: missing header"), "{err}");
    assert!(!dir.path().join("b.json").exists());
}

#[test]
fn wrong_header_names_the_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "cnn,gflops\nResNet-32,1.54\n").unwrap();
    let out = transim(&[
        "fit-checkpoint",
        "--input",
        path(&bad),
        "--bundle",
        path(&dir.path().join("b.json")),
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv:1:"));
}

#[test]
fn predict_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let b = build_bundle(dir.path());
    let out = ok(&["predict", "--bundle", path(&b), "--scenario", path(&scenario("worked_example.toml"))]);
    assert!(out.contains("14096.5277"), "{out}");
    let json: Value = serde_json::from_str(&ok(&[
        "--format",
        "json",
        "predict",
        "--bundle",
        path(&b),
        "--scenario",
        path(&scenario("worked_example.toml")),
    ]))
    .unwrap();
    let total = json["prediction"]["total_time_sec"].as_f64().unwrap();
    let oracle = 64_000.0 / 4.56 + 16.0 * 3.84;
    assert!((total - oracle).abs() < 1e-9, "{total} vs {oracle}");
}

#[test]
fn simulate_matches_library_call() {
    let dir = tempfile::tempdir().unwrap();
    let b = build_bundle(dir.path());
    let sc = scenario("k80x4_us_west1.toml");
    let json: Value =
        serde_json::from_str(&ok(&["--format", "json", "simulate", "--bundle", path(&b), "--scenario", path(&sc)]))
            .unwrap();
    let cli_total = json["runs"][0]["total_time_sec"].as_f64().unwrap();
    let resolved = Scenario::load(&sc).unwrap().resolve(&ModelBundle::load(&b).unwrap()).unwrap();
    let direct = simulate(&resolved.config, &resolved.models).unwrap();
    assert_eq!(cli_total, direct.total_time_sec);
}

#[test]
fn detect_flags_saturated_parameter_server() {
    let dir = tempfile::tempdir().unwrap();
    let b = build_bundle(dir.path());
    let sc = scenario("p100x6_capped.toml");
    let speeds = dir.path().join("speeds.csv");
    ok(&["simulate", "--bundle", path(&b), "--scenario", path(&sc), "--speed-out", path(&speeds)]);
    let json: Value = serde_json::from_str(&ok(&[
        "--format",
        "json",
        "detect",
        "--bundle",
        path(&b),
        "--scenario",
        path(&sc),
        "--stream",
        path(&speeds),
    ]))
    .unwrap();
    let alert = &json["alerts"][0];
    assert_eq!(alert["alert"]["classification"], "parameter-server");
    assert_eq!(alert["mitigation"]["recommended_ps_count"], 2);
    assert!(alert["alert"]["detected_at_sec"].as_f64().unwrap() >= 30.0);
}

#[test]
fn missing_model_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("b.json");
    ok(&["fit-speed", "--input", path(&fixture("step_times.csv")), "--bundle", path(&b), "--seed", "1"]);
    let out = transim(&["predict", "--bundle", path(&b), "--scenario", path(&scenario("k80x4_us_west1.toml"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("no lifetime distribution for K80/us-west1"), "{err}");
}

#[test]
fn report_writes_series() {
    let dir = tempfile::tempdir().unwrap();
    let b = build_bundle(dir.path());
    let out_dir = dir.path().join("plots");
    ok(&["report", "--bundle", path(&b), "--out-dir", path(&out_dir)]);
    let names: Vec<String> =
        std::fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.len() >= 4, "{names:?}");
    for n in &names {
        let text = std::fs::read_to_string(out_dir.join(n)).unwrap();
        assert!(text.lines().count() > 1, "{n} is empty");
    }
}

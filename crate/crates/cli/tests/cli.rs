use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn charfan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_charfan")).args(args).output().unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut all = args.to_vec();
    all.extend(["--out", out]);
    charfan(&all)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn pencil_reports_the_cos3phi_fan() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["pencil"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(dir.path());
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["command"], "pencil");
    let sc = r["scenarios"].as_array().unwrap().iter().find(|s| s["name"] == "cubic-a0-b1").unwrap();
    let fan: Vec<f64> = sc["analyses"][0]["summary"]["states"][0]["fan"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let pi = std::f64::consts::PI;
    for (got, want) in fan.iter().zip([pi / 6.0, pi / 2.0, 5.0 * pi / 6.0]) {
        assert!((got - want).abs() <= 1e-10);
    }
    assert!(dir.path().join("cubic-a0-b1-pencil.svg").exists());
    assert!(dir.path().join("cubic-a0-b1-pencil-scan.csv").exists());
}

#[test]
fn degenerate_locus_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["pencil", "--format", "json"]).status.code(), Some(0));
    let r = report(dir.path());
    let sc = r["scenarios"].as_array().unwrap().iter().find(|s| s["name"] == "cubic-a0-b0").unwrap();
    let nodes = sc["analyses"][0]["summary"]["degenerate_nodes"].as_array().unwrap();
    assert!(!nodes.is_empty());
    for n in nodes {
        assert_eq!(n[0].as_f64(), Some(0.0));
        assert_eq!(n[1].as_f64(), Some(0.0));
    }
    assert!(!dir.path().join("cubic-a0-b0-pencil.svg").exists());
}

#[test]
fn malformed_expression_exits_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        r#"
name = "bad"
[system]
kind = "diagonal"
vars = ["r1", "r2", "r3"]
lambda = ["r1", "r2 + (3", "r3"]
region = { lo = [0, 1, 2], hi = [0.1, 1.1, 2.1] }
[richness]
"#,
    );
    let out = run_in(dir.path(), &["richness", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("system.lambda[1]"), "{err}");
    assert!(err.contains("offset 7"), "{err}");
    assert!(err.contains("r2 + (3\n"), "{err}");
    assert!(err.trim_end().ends_with("       ^"), "{err}");
}

#[test]
fn malformed_candidate_exits_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        r#"
name = "bad-claws"
[system]
kind = "quasilinear"
vars = ["p", "q"]
a = [["1", "0"], ["0", "1"]]
b = [["1", "0"], ["0", "2"]]
region = { lo = [0, 0], hi = [1, 1] }
[claws]
g = ["p", "q"]
h = ["p", "2*q)"]
"#,
    );
    let out = run_in(dir.path(), &["claws", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("claws.h[1]"), "{err}");
}

#[test]
fn failed_verdict_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "wrong.toml",
        r#"
name = "wrong-expectation"
[system]
kind = "diagonal"
vars = ["r1", "r2", "r3"]
phi = ["atan(r1 + r2 + r3 + r1) + 0.1*r2*r3", "atan(r1 + 2*r2 + r3)", "atan(r1 + r2 + 2*r3)"]
region = { lo = [0.0, 0.8, 1.6], hi = [0.5, 1.3, 2.1] }
[richness]
expect = "rich"
"#,
    );
    let out = run_in(dir.path(), &["richness", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(dir.path())["status"], "fail");
}

#[test]
fn unknown_config_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "typo.toml", "name = \"x\"\nsamplez = 3\n[system]\nkind = \"diagonal\"\n");
    assert_eq!(run_in(dir.path(), &["all", "--config", &cfg]).status.code(), Some(1));
    assert_eq!(run_in(dir.path(), &["all", "--config", "/nonexistent/file.toml"]).status.code(), Some(1));
}

#[test]
fn formats_select_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["riccati", "--format", "csv"]).status.code(), Some(0));
    assert!(!dir.path().join("report.json").exists());
    assert!(dir.path().join("compressive-riccati-trace.csv").exists());
    assert!(!dir.path().join("compressive-riccati.svg").exists());
    let csv = std::fs::read_to_string(dir.path().join("compressive-riccati-trace.csv")).unwrap();
    assert!(csv.lines().count() > 10);
}

#[test]
fn riccati_reports_blowup_and_none() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["riccati", "--format", "json,svg"]).status.code(), Some(0));
    let r = report(dir.path());
    let trace = |name: &str| {
        r["scenarios"].as_array().unwrap().iter().find(|s| s["name"] == name).unwrap()["analyses"][0]["summary"]["trace"]
            .clone()
    };
    let c = trace("compressive");
    assert!(c["s_star"].as_f64().is_some());
    assert!(c["cross_check_deviation"].as_f64().unwrap() <= 1e-4 * c["cross_check_max_abs_w"].as_f64().unwrap());
    assert!(trace("expansive")["s_star"].is_null());
    assert!(trace("flat-trace")["s_star"].is_null());
    let svg = std::fs::read_to_string(dir.path().join("compressive-riccati.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
}

#[test]
fn thread_count_does_not_change_the_report() {
    let one = tempfile::tempdir().unwrap();
    let many = tempfile::tempdir().unwrap();
    let run = |dir: &Path, threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_charfan"))
            .args(["geoflow", "--format", "json", "--out", dir.to_str().unwrap()])
            .env("CHARFAN_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(run(one.path(), "1").status.code(), Some(0));
    assert_eq!(run(many.path(), "4").status.code(), Some(0));
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    assert_eq!(strip(report(one.path())), strip(report(many.path())));
    assert_eq!(run(one.path(), "zero").status.code(), Some(1));
}

#[test]
fn seed_and_tol_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["richness", "--seed", "7", "--tol", "1e-6", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    assert_eq!(r["seed"], 7);
    assert_eq!(r["tol"].as_f64(), Some(1e-6));
    assert!(r["scenarios"][0]["config"]["system"]["kind"].is_string());
}

#[test]
fn catalog_lists_bundled_scenarios() {
    let out = charfan(&["catalog"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["eps3", "perturbed", "compressive", "liouville"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{text}");
    }
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gdnls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdnls"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn default_config() -> Value {
    let out = gdnls(&["print-default-config"]);
    assert!(out.status.success());
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_config(dir: &Path, cfg: &Value) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string(cfg).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn default_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = default_config();
    let path = write_config(tmp.path(), &cfg);
    let out = tmp.path().join("out");
    let run = gdnls(&["verify", "--config", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stdout));
    assert_eq!(report(&out)["environment"]["sigma"], 1.5);
}

#[test]
fn sigma_outside_the_range_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = default_config();
    cfg["sigma"] = 2.2.into();
    let run = gdnls(&["verify", "--config", &write_config(tmp.path(), &cfg)]);
    assert_eq!(run.status.code(), Some(2));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("sigma") && err.contains("(1, 2)"), "{err}");
}

#[test]
fn loose_quadrature_tolerance_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = default_config();
    cfg["quadrature"]["rel_tol"] = 0.5.into();
    let run = gdnls(&["negdir", "--config", &write_config(tmp.path(), &cfg)]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("rel_tol"));
}

#[test]
fn unknown_fields_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = default_config();
    cfg["sigmaa"] = 1.5.into();
    let run = gdnls(&["verify", "--config", &write_config(tmp.path(), &cfg)]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn verify_passes_at_the_default_point() {
    let tmp = tempfile::tempdir().unwrap();
    let run = gdnls(&["verify", "--out", tmp.path().to_str().unwrap(), "--seed", "7"]);
    assert_eq!(run.status.code(), Some(0));
    let r = report(tmp.path());
    assert_eq!(r["environment"]["seed"], 7);
    assert!(r["checks"].as_array().unwrap().len() > 20);
}

#[test]
fn negdir_table_has_one_row_per_radius() {
    let tmp = tempfile::tempdir().unwrap();
    gdnls(&["negdir", "--out", tmp.path().to_str().unwrap()]);
    let csv = std::fs::read_to_string(tmp.path().join("negdir.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("R,mu,nu,quad_form,err_mass_rate,err_mom_rate,nu_derivative_form")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    // 17 significant digits
    assert_eq!(rows[0].split(',').next(), Some("2.5000000000000000e1"));
}

#[test]
fn short_evolution_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = default_config();
    cfg["integrator"]["t_end"] = 0.2.into();
    cfg["integrator"]["sample_every"] = 50.into();
    cfg["experiment"]["grid"]["N"] = 2048.into();
    let path = write_config(tmp.path(), &cfg);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let ra = gdnls(&["evolve", "--config", &path, "--out", a.to_str().unwrap()]);
    let rb = gdnls(&["evolve", "--config", &path, "--out", b.to_str().unwrap(), "--jobs", "3"]);
    assert!(matches!(ra.status.code(), Some(0 | 1)));
    assert_eq!(ra.status.code(), rb.status.code());
    for name in ["trace_0.csv", "trace_0.01.csv", "trace_-0.01.csv", "report.json"] {
        let (x, y) = (std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
        assert_eq!(x, y, "{name} differs between runs");
    }
    let trace = std::fs::read_to_string(a.join("trace_0.01.csv")).unwrap();
    let first: Vec<&str> = trace.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&first[1..4], ["0.0000000000000000e0"; 3]);
    assert_eq!(trace.lines().count(), 1 + 5);
}

#[test]
fn sweep_records_invalid_points() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = default_config();
    cfg["sweep"]["sigmas"] = serde_json::json!([1.5, 1.0]);
    cfg["sweep"]["speeds"] = serde_json::json!([1.0]);
    let path = write_config(tmp.path(), &cfg);
    let run = gdnls(&["sweep", "--config", &path, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    let points = report(tmp.path())["data"]["points"].as_array().unwrap().clone();
    assert_eq!(points[0]["sigma"], 1.0);
    assert_eq!(points[0]["status"], "invalid");
    assert!(points[0]["message"].as_str().unwrap().contains("(1, 2)"));
    assert_eq!(points[1]["status"], "pass");
}

#[test]
fn blow_up_stops_the_run_with_status_3() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = default_config();
    cfg["integrator"]["dt"] = 0.2.into();
    cfg["integrator"]["t_end"] = 20.0.into();
    cfg["integrator"]["sample_every"] = 5.into();
    cfg["experiment"]["grid"]["N"] = 2048.into();
    let path = write_config(tmp.path(), &cfg);
    let run = gdnls(&["evolve", "--config", &path, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(3));
    let runs = report(tmp.path())["data"]["runs"].as_array().unwrap().clone();
    assert!(runs.iter().all(|r| r["aborted_at"].is_number()));
}

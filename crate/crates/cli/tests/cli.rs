use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(configs().join(name)).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn ddsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddsim")).args(args).env("DDSIM_LOG", "error").output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("error json on stderr");
    serde_json::from_str(line).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn symmetric_not_reports_quarter_turn_and_nanosecond_pulse() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let summary = stdout_json(&ddsim(&["run", s(&configs().join("not_symmetric.json")), "--out", s(&out)]));
    assert!((summary["theta0"].as_f64().unwrap() - FRAC_PI_2).abs() < 1e-12);
    let t = summary["gate"]["solution"]["duration"].as_f64().unwrap();
    assert!((t - 1.03).abs() < 0.01, "T = {t}");
    assert!(summary["lambda0_rate_per_second"].as_f64().unwrap() >= 1e9);

    for f in ["summary.json", "effective.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["config"]["mode"], "effective");
    assert!(manifest["timings_s"]["compute"].is_number());
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);

    let csv = std::fs::read_to_string(out.join("effective.csv")).unwrap();
    assert!(csv.starts_with("t,theta,theta_dot,omega,omega_integral,phi_lambda,e_plus,e_minus\n"));
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().count(), 1 + 401);
}

#[test]
fn detuning_sweep_yields_one_row_per_step_independent_of_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("sweep_detuning.json");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    stdout_json(&ddsim(&["run", s(&cfg), "--out", s(&a), "--jobs", "1"]));
    stdout_json(&ddsim(&["run", s(&cfg), "--out", s(&b), "--jobs", "4"]));
    let body_a = std::fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(body_a, std::fs::read(b.join("sweep.csv")).unwrap());

    let mut reader = csv::Reader::from_reader(body_a.as_slice());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 16);
    let detunings: Vec<f64> = rows.iter().map(|r| r[col("pulses.detuning")].parse().unwrap()).collect();
    assert!(detunings.windows(2).all(|w| w[0] < w[1]));
    assert_eq!((detunings[0], detunings[15]), (-200.0, -50.0));
    for r in &rows {
        assert_eq!(&r[col("status")], "ok");
        assert!(r[col("fidelity")].parse::<f64>().unwrap() >= 1.0 - 1e-9);
    }
}

#[test]
fn propagated_sweep_is_deterministic_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = load("sweep_detuning.json");
    cfg["exact"] = "propagate-rwa".into();
    cfg["sweep"]["axes"][0]["start"] = (-60.0).into();
    cfg["sweep"]["axes"][0]["steps"] = 2.into();
    let path = write_config(tmp.path(), "sweep.json", &cfg);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    stdout_json(&ddsim(&["run", s(&path), "--out", s(&a), "--jobs", "1"]));
    stdout_json(&ddsim(&["run", s(&path), "--out", s(&b), "--jobs", "2"]));
    let body = std::fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert_eq!(body, std::fs::read_to_string(b.join("sweep.csv")).unwrap());
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let fidelity = reader.headers().unwrap().iter().position(|h| h == "fidelity").unwrap();
    for r in reader.records() {
        assert!(r.unwrap()[fidelity].parse::<f64>().unwrap() >= 0.99);
    }
}

#[test]
fn same_seed_reproduces_trajectory_and_other_seeds_differ() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = load("five_level_rwa.json");
    cfg["spectrum"]["spacing_jitter"] = 0.2.into();
    for e in ["envelope0", "envelope1"] {
        cfg["pulses"][e]["duration"] = 2.0.into();
    }
    cfg["pulses"]["duration"] = 2.0.into();
    let path = write_config(tmp.path(), "rwa.json", &cfg);
    let run = |name: &str, seed: &str| {
        let out = tmp.path().join(name);
        stdout_json(&ddsim(&["run", s(&path), "--out", s(&out), "--seed", seed]));
        std::fs::read(out.join("trajectory.csv")).unwrap()
    };
    let first = run("a", "11");
    assert_eq!(first, run("b", "11"));
    assert_ne!(first, run("c", "12"));
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("t,re_c0,im_c0,re_c1,im_c1,re_k0,im_k0,"));
    assert_eq!(text.lines().count(), 1 + 201);
}

#[test]
fn malformed_json_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.json");
    std::fs::write(&path, "{ \"mode\": \"effective\", ").unwrap();
    let out_dir = tmp.path().join("out");
    let out = ddsim(&["run", s(&path), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"]["kind"], "schema");
    assert!(!out_dir.exists());
}

#[test]
fn schema_violations_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let mut unknown = load("not_symmetric.json");
    unknown["pulses"]["amplitude"] = 1.0.into();
    let mut bad_axis = load("sweep_detuning.json");
    bad_axis["sweep"]["axes"][0]["path"] = "pulses.omega0".into();
    let mut no_steps = load("sweep_detuning.json");
    no_steps["sweep"]["axes"][0]["steps"] = 0.into();
    let mut hierarchy = load("five_level_rwa.json");
    hierarchy["spectrum"]["omega_exc"] = 100.0.into();
    for (i, cfg) in [unknown, bad_axis, no_steps, hierarchy].iter().enumerate() {
        let path = write_config(tmp.path(), &format!("c{i}.json"), cfg);
        let out = ddsim(&["run", s(&path), "--out", s(&out_dir)]);
        assert_eq!(out.status.code(), Some(2), "config {i}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(stderr_error(&out)["error"]["exit_code"], 2);
        assert!(!out_dir.exists());
    }
}

#[test]
fn numerical_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = load("five_level_rwa.json");
    cfg["integrator"]["max_steps"] = 10.into();
    let path = write_config(tmp.path(), "c.json", &cfg);
    let out_dir = tmp.path().join("out");
    let out = ddsim(&["run", s(&path), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_error(&out)["error"]["kind"], "numerical");
    assert!(!out_dir.exists());
}

#[test]
fn io_failures_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ddsim(&["run", s(&tmp.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_error(&out)["error"]["kind"], "io");

    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = ddsim(&["run", s(&configs().join("not_symmetric.json")), "--out", s(&blocker.join("sub"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn validate_reports_without_writing() {
    let v = stdout_json(&ddsim(&["validate", s(&configs().join("sweep_detuning.json"))]));
    assert_eq!(v["valid"], true);
    assert_eq!(v["points"], 16);
    assert_eq!(v["levels"], 5);
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = load("not_symmetric.json");
    cfg["mode"] = "teleport".into();
    let path = write_config(tmp.path(), "c.json", &cfg);
    assert_eq!(ddsim(&["validate", s(&path)]).status.code(), Some(2));
}

#[test]
fn compare_checks_the_square_law_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let report = |cfg: &Path, name: &str| {
        let out = tmp.path().join(name);
        let v = stdout_json(&ddsim(&["compare", s(cfg), "--out", s(&out)]));
        assert!(out.join("compare.csv").exists());
        v["report"].clone()
    };
    let r = report(&configs().join("compare_r005.json"), "a");
    assert!((r["coupling_ratio"].as_f64().unwrap() - 0.05).abs() < 1e-12);
    assert!(r["max_deviation"].as_f64().unwrap() <= 0.0125);
    assert_eq!(r["within_validity"], true);
    assert_eq!(r["pass"], true);

    let r = report(&configs().join("compare_r05.json"), "b");
    assert_eq!(r["within_validity"], false);
    assert_eq!(r["pass"], false);

    let mut zero = load("compare_r005.json");
    zero["pulses"]["amp0"] = 0.0.into();
    zero["pulses"]["amp1"] = 0.0.into();
    let r = report(&write_config(tmp.path(), "zero.json", &zero), "c");
    assert_eq!(r["max_deviation"].as_f64().unwrap(), 0.0);
}

#[test]
fn hadamard_synthesis_verifies_against_propagation() {
    let tmp = tempfile::tempdir().unwrap();
    let v = stdout_json(&ddsim(&["run", s(&configs().join("hadamard.json")), "--out", s(tmp.path())]));
    let gate = &v["gate"];
    assert!(gate["solution"]["predicted_fidelity"].as_f64().unwrap() >= 1.0 - 1e-9);
    assert!(gate["exact"]["fidelity"].as_f64().unwrap() >= 0.99);
    assert!(gate["configured_pulses"]["duration"].is_number());
}

#[test]
fn stirap_config_transfers_population() {
    let tmp = tempfile::tempdir().unwrap();
    let v = stdout_json(&ddsim(&["run", s(&configs().join("stirap.json")), "--out", s(tmp.path())]));
    assert!(v["exact"]["transfer_probability"].as_f64().unwrap() >= 0.95);
    assert!(v["schedule"]["delta_residual"].as_f64().unwrap().abs() < 1e-6);
    assert!(tmp.path().join("trajectory.csv").exists());
}

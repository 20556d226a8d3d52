use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use decaylab::analytic::DiskFunctionSamples;
use decaylab::experiment::{RunManifest, RunStatus};
use decaylab::linalg::c;

fn decaylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_decaylab"))
        .args(args)
        .env_remove("DECAYLAB_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_series(path: &Path, f: impl Fn(f64) -> f64, t_max: f64, n: usize) {
    let mut text = String::from("t,value\n");
    for k in 0..n {
        let t = t_max * k as f64 / (n - 1) as f64;
        text.push_str(&format!("{t:e},{:e}\n", f(t)));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn presets_lists_all_five() {
    let o = decaylab(&["presets"]);
    assert!(o.status.success());
    for name in ["lorentzian-full", "lorentzian-half", "dephasing", "friedrichs", "compensation"] {
        assert!(stdout(&o).contains(name), "{name}");
    }
    let o = decaylab(&["presets", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["friedrichs"]["parameters"]["env_modes"], 1000);
}

#[test]
fn unknown_preset_is_a_usage_error_listing_presets() {
    let o = decaylab(&["run", "--preset", "lorentzian"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("available presets: lorentzian-full"), "{}", stderr(&o));
    assert_eq!(decaylab(&["run"]).status.code(), Some(2));
    assert_eq!(decaylab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn run_writes_verifiable_manifest_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        let o = Command::new(env!("CARGO_BIN_EXE_decaylab"))
            .args(["run", "--preset", "lorentzian-full", "--transfer-check"])
            .env("DECAYLAB_OUTPUT_DIR", d)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("divergent-log"));
    }
    let m = RunManifest::load(&dirs[0]).unwrap();
    assert_eq!(m.status, RunStatus::Complete);
    assert!(!m.partial);
    assert!(m.verify(&dirs[0]).unwrap().is_empty());
    let v = &m.verdicts[0];
    assert_eq!(v.tail.as_deref(), Some("exponential"));
    assert_eq!(v.khalfin.as_deref(), Some("divergent-log"));
    for f in m.outputs.iter().filter(|f| f.path.ends_with(".csv")) {
        assert_eq!(
            fs::read(dirs[0].join(&f.path)).unwrap(),
            fs::read(dirs[1].join(&f.path)).unwrap(),
            "{}",
            f.path
        );
    }
    // tampering is detected
    fs::write(dirs[0].join("survival_amplitude.csv"), "t,re,im\n").unwrap();
    assert_eq!(m.verify(&dirs[0]).unwrap(), vec!["survival_amplitude.csv".to_string()]);
    let dat = fs::read_to_string(dirs[1].join("survival_probability.dat")).unwrap();
    assert!(dat.starts_with("# series: survival_probability"));
    assert_eq!(dat.lines().nth(2).unwrap().split_whitespace().count(), 2);
}

#[test]
fn flags_override_config_which_overrides_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    let out = tmp.path().join("out");
    fs::write(
        &cfg,
        format!(
            r#"{{"model": {{"preset": "compensation", "overrides": {{"dim": 8}}}},
               "time_grid": {{"t0": 0, "t_max": 500, "points": 5001, "spacing": "linear"}},
               "khalfin_windows": [1, 3, 10, 30, 100, 300],
               "outputs": {{"directory": "{}", "formats": ["csv", "json"]}}}}"#,
            out.display()
        ),
    )
    .unwrap();
    let o = decaylab(&["run", "--config", cfg.to_str().unwrap(), "--t-max", "400", "--set", "dim=10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = RunManifest::load(&out).unwrap();
    assert_eq!(m.config.time_grid.t_max, 400.0);
    assert_eq!(m.config.time_grid.points, 5001);
    assert_eq!(m.config.parameters["dim"], 10);
    assert_eq!(m.inputs.len(), 1);
    assert!(m.outputs.iter().all(|f| !f.path.ends_with(".dat")));
    assert!(m.verdicts.iter().all(|v| v.khalfin.as_deref() != Some("divergent-log")), "{:?}", m.verdicts);
}

#[test]
fn truncation_is_a_numeric_error_with_partial_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = decaylab(&[
        "run",
        "--preset",
        "friedrichs",
        "--set",
        "horizon=5000",
        "--t-max",
        "5000",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("series"));
    let m = RunManifest::load(&out).unwrap();
    assert_eq!(m.status, RunStatus::Failed);
    assert!(m.partial);
    assert_eq!(m.failed_stage.as_deref(), Some("series"));
    assert!(m.verify(&out).unwrap().is_empty());
}

#[test]
fn khalfin_and_classify_on_series_files() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = tmp.path().join("exp.csv");
    write_series(&exp, |t| (-t).exp(), 100.0, 100_001);
    let o = decaylab(&["khalfin", exp.to_str().unwrap(), "--window-range", "1,100,9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["verdict"], "divergent-log");
    let o = decaylab(&["khalfin", exp.to_str().unwrap(), "--windows", "10", "--csv"]);
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let k: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert!((k + 101f64.ln()).abs() < 1e-3 * 101f64.ln());

    let prob = tmp.path().join("prob.csv");
    write_series(&prob, |t| 3.0 * (-2.0 * t).exp(), 10.0, 1001);
    let o = decaylab(&["classify", prob.to_str().unwrap(), "--window", "1,10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("verdict: exponential"), "{}", stdout(&o));
    let report = tmp.path().join("report.json");
    let o = decaylab(&["classify", prob.to_str().unwrap(), "--json", "--output", report.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "exponential");
    assert!(report.exists());

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "t,value\n0,1\n0,2\n").unwrap();
    assert_eq!(decaylab(&["classify", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(decaylab(&["khalfin", "/nonexistent.csv", "--windows", "1"]).status.code(), Some(2));
}

#[test]
fn jensen_reports_gap_and_fails_on_wrong_zeros() {
    let tmp = tempfile::tempdir().unwrap();
    let z0 = c(0.3, -0.2);
    let good = DiskFunctionSamples::from_fn(|z| vec![(z - z0) * z.exp()], 2048, Some(vec![z0])).unwrap();
    let path = tmp.path().join("s.csv");
    fs::write(&path, good.to_csv()).unwrap();
    let o = decaylab(&["jensen", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(v["gap"].as_f64().unwrap().abs() < 1e-8);

    let mut wrong = good.clone();
    wrong.interior_zeros = Some(vec![c(0.5, 0.0)]);
    fs::write(&path, wrong.to_csv()).unwrap();
    assert_eq!(decaylab(&["jensen", path.to_str().unwrap()]).status.code(), Some(1));
    let o = decaylab(&["jensen", path.to_str().unwrap(), "--subharmonic"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("subharmonic"));
}

#[test]
fn verify_quick_passes_and_injected_fault_fails() {
    let o = decaylab(&["verify", "quick"]);
    assert!(o.status.success(), "{}\n{}", stdout(&o), stderr(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 10);
    let o = decaylab(&["verify", "quick", "--inject", "quadrature"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL [ 3]"));
    assert!(stdout(&o).contains("violated normalization"));
    assert_eq!(decaylab(&["verify", "slow"]).status.code(), Some(2));
}

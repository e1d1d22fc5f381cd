use std::path::Path;
use std::process::{Command, Output};

fn qbm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbm"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("run qbm")
}

/// Data rows of a CSV written by qbm, after checking the schema line.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let (first, rest) = text.split_once('\n').unwrap();
    assert_eq!(first, "# qbm-schema v1");
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<String> {
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].clone()).collect()
}

fn floats(v: &[String]) -> Vec<f64> {
    v.iter().map(|s| s.parse().unwrap()).collect()
}

const SQUEEZED: &str = r#"evolve.initial={"kind": "squeezed", "r": 2.0}"#;

#[test]
fn exact_evolution_starts_at_the_input_state() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(dir.path(), &["evolve", "--set", SQUEEZED, "--set", "evolve.times=[0, 0.5, 1]"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&dir.path().join("evolve.csv"));
    assert_eq!(rows.len(), 3);
    let deficit = floats(&column(&h, &rows, "deficit"));
    let entropy = floats(&column(&h, &rows, "linear_entropy"));
    assert!(deficit[0].abs() < 1e-12 && entropy[0].abs() < 1e-12);
    assert!(column(&h, &rows, "flag").iter().all(|f| f == "OK"));
    assert!(column(&h, &rows, "provenance")[0].contains("exact_channel"));
}

#[test]
fn outer_propagator_flags_violation_and_patched_does_not() {
    let dir = tempfile::tempdir().unwrap();
    let times = r#"evolve.times={"start": 0, "stop": 2, "points": 201}"#;
    let o = qbm(dir.path(), &["evolve", "--propagator", "outer", "--set", SQUEEZED, "--set", times]);
    assert!(o.status.success());
    let (h, rows) = read_csv(&dir.path().join("evolve.csv"));
    assert!(column(&h, &rows, "flag").iter().any(|f| f == "VIOLATION"));

    let o = qbm(dir.path(), &["evolve", "--propagator", "patched", "--set", SQUEEZED, "--set", times]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&dir.path().join("evolve.csv"));
    assert!(column(&h, &rows, "flag").iter().all(|f| f == "OK"));
    let margins = floats(&column(&h, &rows, "dq2_margin"));
    assert!(margins.iter().all(|m| *m >= 0.0));
}

#[test]
fn output_is_deterministic_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["evolve", "--propagator", "gao", "--seed", "11", "--set", "evolve.samples=20", "--set", "evolve.times=[0, 0.1, 1, 5]"];
    let one: Vec<&str> = args.iter().copied().chain(["--jobs", "1"]).collect();
    let four: Vec<&str> = args.iter().copied().chain(["--jobs", "4"]).collect();
    assert!(qbm(a.path(), &one).status.success());
    assert!(qbm(b.path(), &four).status.success());
    let read = |d: &Path| std::fs::read(d.join("evolve.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));

    let grid = ["region-map", "--set", "region_map.kt=[0.5, 2, 8]", "--set", "region_map.alpha_tilde=[0.5, 5]"];
    let one: Vec<&str> = grid.iter().copied().chain(["--jobs", "1"]).collect();
    let three: Vec<&str> = grid.iter().copied().chain(["--jobs", "3"]).collect();
    assert!(qbm(a.path(), &one).status.success());
    assert!(qbm(b.path(), &three).status.success());
    let read = |d: &Path| std::fs::read(d.join("region_map.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"params": {"gamma": 0.1, "alpha": 100, "kt": 10}, "evolv": {}}"#).unwrap();
    let o = qbm(dir.path(), &["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("evolv"));

    let o = qbm(dir.path(), &["evolve", "--set", "evolve.times=[0, 2, 1]"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qbm(dir.path(), &["violation-demo", "--fock-dim", "20"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qbm(dir.path(), &["sweep", "--set", r#"sweep.axes=[{"name": "beta", "values": [1]}]"#]);
    assert_eq!(o.status.code(), Some(2));
    let o = qbm(dir.path(), &["evolve", "--set", "params.gamma=-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"params": {"gamma": 0.1, "alpha": 100, "kt": 10}, "evolve": {"times": [0, 1]}}"#).unwrap();
    let o = qbm(dir.path(), &["evolve", "--config", cfg.to_str().unwrap(), "--set", "params.kt=3"]);
    assert!(o.status.success());
    let resolved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("config.resolved.json")).unwrap()).unwrap();
    assert_eq!(resolved["params"]["kt"], 3.0);
    assert_eq!(resolved["evolve"]["times"], serde_json::json!([0.0, 1.0]));
}

#[test]
fn regime_errors_exit_with_code_3() {
    // the high-temperature condition cannot hold at kT <= hbar omega / 2,
    // so no patch time exists
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(dir.path(), &["evolve", "--propagator", "patched", "--set", "params.kt=0.4"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_passes_and_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let only = r#"verify.only=["algebra", "dilation"]"#;
    let o = qbm(dir.path(), &["verify", "--fock-dim", "20", "--set", only]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify/algebra-table-d20.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);

    let o = qbm(dir.path(), &["verify", "--fock-dim", "20", "--set", only, "--set", "verify.corrupt_algebra_entry=3"]);
    assert_eq!(o.status.code(), Some(1));
    let (h, rows) = read_csv(&dir.path().join("verify.csv"));
    let pass = column(&h, &rows, "pass");
    let names = column(&h, &rows, "check_name");
    for (n, p) in names.iter().zip(&pass) {
        assert_eq!(p == "true", n != "algebra-table", "{n}");
    }
}

#[test]
fn region_map_frontier() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(
        dir.path(),
        &["region-map", "--set", "region_map.kt=[0.3, 0.5, 1, 3, 10, 30]", "--set", "region_map.alpha_tilde=[0.2, 2, 20]", "--set", "region_map.t2=[0.1]"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&dir.path().join("region_map.csv"));
    let kt = floats(&column(&h, &rows, "kt"));
    let j = column(&h, &rows, "j");
    let cond = column(&h, &rows, "high_temp_condition");
    for (k, c) in kt.iter().zip(&cond) {
        if *k <= 0.5 {
            assert_eq!(c, "false");
        }
    }
    // at most one false -> true flip per alpha dt column as kT grows
    for col in ["0", "1", "2"] {
        let seq: Vec<bool> = j.iter().zip(&cond).filter(|(jj, _)| *jj == col).map(|(_, c)| c == "true").collect();
        let flips = seq.windows(2).filter(|w| w[0] != w[1]).count();
        assert!(flips <= 1 && (flips == 0 || !seq[0]), "column {col}: {seq:?}");
    }
    assert!(cond.iter().any(|c| c == "true"));
}

#[test]
fn entropy_curve_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(dir.path(), &["entropy-curve", "--set", "entropy_curve.samples=50"]);
    assert!(o.status.success());
    let (h, rows) = read_csv(&dir.path().join("entropy_curve.csv"));
    let s = floats(&column(&h, &rows, "entropy"));
    let err = floats(&column(&h, &rows, "entropy_error"));
    let dq = floats(&column(&h, &rows, "dq2_min"));
    assert_eq!((s[0], dq[0]), (0.0, 0.0));
    assert!(s.windows(2).all(|w| w[1] > w[0]));
    assert!(err.iter().all(|e| *e < 1e-8));
    assert!(column(&h, &rows, "floor_violations").iter().all(|v| v == "0"));
}

#[test]
fn violation_demo_reports_gao_as_clean() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(
        dir.path(),
        &["violation-demo", "--propagator", "gao", "--fock-dim", "30", "--set", "violation_demo.search.r_points=2", "--set", "violation_demo.search.refinements=0"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("violation.json")).unwrap()).unwrap();
    assert_eq!(report["found"], false);
    assert!(report["best_min_eig"].as_f64().unwrap() > -1e-8);
}

#[test]
fn sweep_over_times_and_params() {
    let dir = tempfile::tempdir().unwrap();
    let axes = r#"sweep.axes=[{"name": "kt", "values": [5, 20]}, {"name": "t2", "values": [0.5, 2]}]"#;
    let o = qbm(dir.path(), &["sweep", "--set", axes]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 4);
    assert_eq!(floats(&column(&h, &rows, "kt")), vec![5.0, 5.0, 20.0, 20.0]);
    assert_eq!(floats(&column(&h, &rows, "t2")), vec![0.5, 2.0, 0.5, 2.0]);
    let patched = floats(&column(&h, &rows, "cp_margin_patched"));
    let cond = column(&h, &rows, "high_temp_condition");
    for (m, c) in patched.iter().zip(&cond) {
        if c == "true" {
            assert!(*m >= -1e-10, "{m}");
        }
    }
}

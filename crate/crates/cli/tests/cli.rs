use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn synclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synclab"))
        .args(args)
        .env_remove("SYNCLAB_OUT")
        .output()
        .unwrap()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
        .display()
        .to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    (header, lines.map(|l| l.split(',').map(str::to_string).collect()).collect())
}

#[test]
fn manifest_lists_every_file_and_echoes_the_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = synclab(&["run", &scenario("lif_pair_kick.json"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["tool"], "synclab");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["failed"], false);
    assert_eq!(m["scenario"]["kind"], "kick");
    let mut listed: Vec<String> = m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap().to_string())
        .collect();
    let mut present: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    listed.sort();
    present.sort();
    assert_eq!(listed, present);
    for f in m["files"].as_array().unwrap() {
        if f["format"] == "csv" {
            let (header, rows) = read_csv(&out.join(f["path"].as_str().unwrap()));
            assert_eq!(f["rows"].as_u64().unwrap() as usize, rows.len());
            assert_eq!(f["columns"].as_array().unwrap().len(), header.len());
        }
    }
}

#[test]
fn lif_pair_ends_in_one_cluster_and_dense_replay_agrees() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("lif");
    assert!(synclab(&["run", &scenario("lif_pair_kick.json"), "--out", out.to_str().unwrap()])
        .status
        .success());
    let m = manifest(&out);
    assert_eq!(m["summary"]["clusters"], 1);
    assert!(m["summary"]["dense"]["max_time_difference"].as_f64().unwrap() <= 1e-6);
    let (header, rows) = read_csv(&out.join("events.csv"));
    assert_eq!(&header[..2], ["time", "firer"]);
    assert_eq!(rows.last().unwrap()[4], "2");
    let events = out.join("firings.csv");
    let dense = out.join("dense_firings.csv");
    let o = synclab(&["compare", events.to_str().unwrap(), dense.to_str().unwrap(), "--tol", "1e-6"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn strong_coupling_synchronizes_the_circuit_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("vdp");
    assert!(synclab(&["run", &scenario("vdp_pair_sync.json"), "--out", out.to_str().unwrap()])
        .status
        .success());
    let (header, rows) = read_csv(&out.join("sync_metric.csv"));
    assert_eq!(header, ["t", "sync"]);
    let last: f64 = rows.last().unwrap()[1].parse().unwrap();
    assert!(last <= 1e-6);
    let (header, _) = read_csv(&out.join("trajectory.csv"));
    assert_eq!(header, ["t", "node", "x0", "x1", "output"]);
    let cert: Value = serde_json::from_str(&fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    assert!(cert["max_lyapunov_residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn missing_kind_is_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), "bad.json", "{\n  \"name\": \"x\",\n  \"t_end\": 1.0\n}\n");
    let o = synclab(&["run", &path, "--out", tmp.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("kind") && err.contains("line"), "{err}");
}

#[test]
fn unknown_field_reports_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), "bad.json", "{\n  \"kind\": \"phase_model\",\n  \"coupling\": {\"type\": \"kuramoto\", \"k\": 1.0, \"gain\": 2},\n  \"oscillators\": 3,\n  \"t_end\": 1.0\n}\n");
    let o = synclab(&["run", &path, "--out", tmp.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("gain") && err.contains("line 3"), "{err}");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(synclab(&["run"]).status.code(), Some(2));
    assert_eq!(synclab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(synclab(&["compare", "a.csv"]).status.code(), Some(2));
}

#[test]
fn simulation_failure_keeps_a_failed_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    // s < 0 leaves the QIF field without a positive speed everywhere
    let path = write(
        tmp.path(),
        "fail.json",
        r#"{"kind": "kick", "prc": {"type": "model", "model": {"name": "qif", "s": -1.0}, "eps": 0.1}, "phases": [0.0, 1.0], "stop": {"max_firings": 3}}"#,
    );
    let out = tmp.path().join("out");
    let o = synclab(&["run", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["failed"], true);
    assert!(m["error"].as_str().unwrap().contains("simulation"));
}

#[test]
fn partial_artifacts_survive_a_failure() {
    let tmp = tempfile::tempdir().unwrap();
    // the certificate step needs the circuit model; the trajectory is written first
    let path = write(
        tmp.path(),
        "partial.json",
        r#"{"kind": "diffusive", "model": {"name": "vdp", "mu": 1.0}, "coupling": {"topology": "ring", "k": 1.0}, "initial": [[2.0, 0.0], [0.0, 1.0]], "t_end": 1.0, "certificate": true}"#,
    );
    let out = tmp.path().join("out");
    let o = synclab(&["run", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let m = manifest(&out);
    assert_eq!(m["failed"], true);
    let files: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert!(files.contains(&"trajectory.csv") && out.join("trajectory.csv").exists());
}

#[test]
fn compare_detects_differences() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let s = scenario("kuramoto.json");
    assert!(synclab(&["run", &s, "--out", a.to_str().unwrap()]).status.success());
    assert!(synclab(&["run", &s, "--out", b.to_str().unwrap()]).status.success());
    assert_eq!(
        synclab(&["compare", a.to_str().unwrap(), b.to_str().unwrap(), "--tol", "0"])
            .status
            .code(),
        Some(0)
    );
    let c = tmp.path().join("c");
    assert!(synclab(&["run", &s, "--out", c.to_str().unwrap(), "--seed", "99"]).status.success());
    assert_eq!(
        synclab(&["compare", a.to_str().unwrap(), c.to_str().unwrap(), "--tol", "1e-9"])
            .status
            .code(),
        Some(1)
    );
    let d = tmp.path().join("d");
    assert!(synclab(&["run", &scenario("lif_pair_kick.json"), "--out", d.to_str().unwrap()])
        .status
        .success());
    assert_eq!(
        synclab(&["compare", a.to_str().unwrap(), d.to_str().unwrap(), "--tol", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn seed_override_is_recorded_and_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenario("lif_network_kick.json");
    let runs: Vec<PathBuf> = (0..2).map(|i| tmp.path().join(format!("r{i}"))).collect();
    for r in &runs {
        assert!(synclab(&["run", &s, "--out", r.to_str().unwrap(), "--seed", "5"]).status.success());
    }
    assert_eq!(manifest(&runs[0])["seed"], 5);
    for f in ["events.csv", "firings.csv", "raster.csv", "prc.csv"] {
        assert_eq!(fs::read(runs[0].join(f)).unwrap(), fs::read(runs[1].join(f)).unwrap(), "{f}");
    }
}

#[test]
fn env_var_sets_the_output_root_and_jobs_run_batches() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_synclab"))
        .args(["run", &scenario("kuramoto.json"), &scenario("lif_pair_kick.json"), "--jobs", "2"])
        .env("SYNCLAB_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("kuramoto").join("manifest.json").exists());
    assert!(tmp.path().join("lif_pair_kick").join("events.csv").exists());
}

#[test]
fn csv_formatting_rules() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("k");
    assert!(synclab(&["run", &scenario("kuramoto.json"), "--out", out.to_str().unwrap()])
        .status
        .success());
    let text = fs::read_to_string(out.join("phases.csv")).unwrap();
    assert!(!text.contains('\r') && text.ends_with('\n'));
    assert!(text.starts_with("t,theta_1,"));
    let cell = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().to_string();
    let mantissa = cell.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{cell}");
    let (header, _) = read_csv(&out.join("order.csv"));
    assert_eq!(header, ["t", "r", "psi"]);
}

#[test]
fn schema_command_prints_json() {
    let o = synclab(&["schema"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.to_string().contains("phase_model"));
}

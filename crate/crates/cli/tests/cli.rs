use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use leaklab_core::walk::stream_seed;
use serde_json::Value;
use tempfile::TempDir;

fn leaklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leaklab"))
        .args(args)
        .env("LEAKLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn write_scenario(dir: &TempDir, name: &str, doc: &Value) -> String {
    let path = dir.path().join(name);
    fs::write(&path, doc.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            (PathBuf::from(p.file_name().unwrap()), bytes)
        })
        .collect();
    out.sort();
    out
}

#[test]
fn honest_partition_exits_with_conflicting_finalization() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = leaklab(&[
        "simulate",
        &scenario("honest-partition.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(10), "{}", String::from_utf8_lossy(&o.stderr));
    let epoch = summary(&out)["violation_epoch"].as_i64().unwrap();
    assert!((4684..=4688).contains(&epoch), "{epoch}");
    for f in ["metrics.csv", "events.jsonl", "summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn delay_attack_exits_with_byzantine_share() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = leaklab(&[
        "simulate",
        &scenario("semi-active-delay.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(11));
}

#[test]
fn dual_active_and_semi_active_exit_codes() {
    let tmp = TempDir::new().unwrap();
    for (file, lo, hi) in [("dual-active.json", 501, 505), ("semi-active-finalize.json", 555, 560)] {
        let out = tmp.path().join(file);
        let o = leaklab(&["simulate", &scenario(file), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(10), "{file}");
        let e = summary(&out)["violation_epoch"].as_i64().unwrap();
        assert!((lo..=hi).contains(&e), "{file}: {e}");
    }
}

#[test]
fn both_outcomes_exit_twelve() {
    // Delay attack that also finalizes both branches once the inactive honest
    // cohorts are gone.
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = leaklab(&[
        "simulate",
        &scenario("semi-active-finalize.json"),
        "--out",
        out.to_str().unwrap(),
        "--set",
        "beta0=0.3",
        "--set",
        "finalize_at=4700",
        "--set",
        "horizon=4800",
    ]);
    let s = summary(&out);
    assert_eq!(o.status.code(), Some(12), "{s}");
}

#[test]
fn bouncing_outside_window_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = leaklab(&[
        "simulate",
        &scenario("bouncing.json"),
        "--out",
        out.to_str().unwrap(),
        "--set",
        "beta0=0.2",
        "--set",
        "p0=0.3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("p0"), "{err}");
    assert!(!out.exists());
}

#[test]
fn type_errors_report_the_field_path() {
    let tmp = TempDir::new().unwrap();
    let file = write_scenario(
        &tmp,
        "bad.json",
        &serde_json::json!({ "scenario_kind": "byz_dual_active", "p0": 0.5, "horizon": 10, "snapshot_epochs": [1, "x"] }),
    );
    let o = leaklab(&["simulate", &file, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("snapshot_epochs[1]"), "{err}");
}

#[test]
fn seed_flag_overrides_the_file() {
    let tmp = TempDir::new().unwrap();
    let run = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        leaklab(&[
            "simulate",
            &scenario("bouncing.json"),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
            "--set",
            "horizon=200",
            "--set",
            "validators=300",
            "--set",
            "snapshot_epochs=[]",
        ]);
        files(&out)
    };
    let a = run("5", "a");
    assert_eq!(a, run("5", "b"));
    assert_ne!(a, run("6", "c"));
}

#[test]
fn unwritable_output_fails_cleanly() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = leaklab(&["reproduce", "table2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn unknown_target_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let o = leaklab(&["reproduce", "table9", "--out", tmp.path().to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn reproduce_prints_comparison_lines() {
    let tmp = TempDir::new().unwrap();
    let o = leaklab(&["reproduce", "table2", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{stdout}");
    let csv = fs::read_to_string(tmp.path().join("table2.csv")).unwrap();
    assert!(csv.starts_with("beta0,t,t_exact,capped\n"));
    let sidecar: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("table2.json")).unwrap()).unwrap();
    assert_eq!(sidecar["parameters"]["p0"], 0.5);
    assert_eq!(sidecar["comparisons"].as_array().unwrap().len(), 5);
}

#[test]
fn sweep_refuses_oversized_grids() {
    let tmp = TempDir::new().unwrap();
    let o = leaklab(&[
        "sweep",
        "--axis",
        "beta0=0:0.33:0.001",
        "--axis",
        "p0=0.01:0.99:0.001",
        "--axis",
        "horizon=10:20:1",
        "--template",
        &scenario("fig4-sweep-template.json"),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cap"));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn single_cell_sweep_matches_simulate() {
    let tmp = TempDir::new().unwrap();
    let template = scenario("bouncing.json");
    let sweep_out = tmp.path().join("sweep");
    let o = leaklab(&[
        "sweep",
        "--axis",
        "validators=400",
        "--axis",
        "horizon=300",
        "--axis",
        "snapshot_epochs=[]",
        "--template",
        &template,
        "--out",
        sweep_out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    // Cell 0 runs with the stream seed derived from the template's seed (7).
    let seed = stream_seed(7, 0).to_string();
    let sim_out = tmp.path().join("sim");
    leaklab(&[
        "simulate",
        &template,
        "--out",
        sim_out.to_str().unwrap(),
        "--set",
        "validators=400",
        "--set",
        "horizon=300",
        "--set",
        "snapshot_epochs=[]",
        "--seed",
        &seed,
    ]);
    let metrics = fs::read_to_string(sim_out.join("metrics.csv")).unwrap();
    let sweep = fs::read_to_string(sweep_out.join("sweep.csv")).unwrap();
    let prefix = format!("0,400,300,[],{seed},");
    let stripped: Vec<&str> = sweep
        .lines()
        .skip(1)
        .map(|l| l.strip_prefix(&prefix).unwrap())
        .collect();
    let expected: Vec<&str> = metrics.lines().skip(1).collect();
    assert_eq!(stripped, expected);
    assert_eq!(
        sweep.lines().next().unwrap(),
        format!(
            "cell,validators,horizon,snapshot_epochs,seed,{}",
            metrics.lines().next().unwrap()
        )
    );
}

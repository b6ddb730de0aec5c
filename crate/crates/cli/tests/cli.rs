//! End-to-end checks of the command-line runner: validation diagnostics,
//! deterministic output, and checkpointed resumption matching a fresh run
//! byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tempent"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tempent-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tmp_dir("invalid");
    let cfg = write_config(
        &dir,
        "bad.json",
        r#"{ "influence": { "h": [], "n_t_max": 10 } }"#,
    );
    let out = bin()
        .args(["influence", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("influence.h"), "stderr: {stderr}");
}

#[test]
fn missing_section_is_rejected() {
    let dir = tmp_dir("missing");
    let cfg = write_config(&dir, "empty.json", r#"{}"#);
    let out = bin()
        .args(["toy", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("toy"));
}

const TOY_CONFIG: &str = r#"{
  "toy": {
    "models": [
      { "variant": "double", "gamma1": 1.5, "alpha1": 0.6,
        "gamma2": 1.25, "alpha2": 0.4, "r": 0.1 }
    ],
    "pairs": [[6, 4], [6, 2]],
    "t_min": 1.0, "t_max": 10.0, "t_step": 0.5
  }
}"#;

#[test]
fn toy_run_is_deterministic() {
    let dir = tmp_dir("toy");
    let cfg = write_config(&dir, "toy.json", TOY_CONFIG);
    for out_name in ["a", "b"] {
        run_ok(
            bin()
                .args(["toy", "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(dir.join(out_name)),
        );
    }
    let a = fs::read(dir.join("a/toy.csv")).unwrap();
    let b = fs::read(dir.join("b/toy.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "repeated toy runs differ");
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# config_sha256="));
    // 19 grid points x 2 pairs, plus comment and header lines
    assert_eq!(text.lines().count(), 2 + 19 * 2);
    assert!(text.contains("toy_delta_double"));
}

fn influence_config(n_t_max: usize) -> String {
    format!(
        r#"{{
  "influence": {{
    "j": 1.0, "dt": 0.1, "h": [0.5], "g": [0.0],
    "n_t_max": {n_t_max}, "bond_cap": [16],
    "renyi_orders": [2], "bipartition_mutual_info": false,
    "checkpoints": true
  }}
}}"#
    )
}

#[test]
fn resume_matches_fresh_run_byte_for_byte() {
    let dir = tmp_dir("resume");
    let full_cfg = write_config(&dir, "full.json", &influence_config(12));
    let short_cfg = write_config(&dir, "short.json", &influence_config(8));

    run_ok(
        bin()
            .args(["influence", "--config"])
            .arg(&full_cfg)
            .arg("--out")
            .arg(dir.join("full")),
    );
    run_ok(
        bin()
            .args(["influence", "--config"])
            .arg(&short_cfg)
            .arg("--out")
            .arg(dir.join("short")),
    );

    let ckpt = dir.join("short/influence_h0p5_g0_cap16.ckpt");
    assert!(ckpt.exists(), "checkpoint missing");

    // parameter-mismatch assertion is rejected before any work happens
    let out = bin()
        .args(["resume", "--checkpoint"])
        .arg(&ckpt)
        .args(["--extend-to", "12", "--h", "0.7", "--out"])
        .arg(dir.join("mismatch"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--h"));

    // zero extension is a no-op success
    run_ok(
        bin()
            .args(["resume", "--checkpoint"])
            .arg(&ckpt)
            .args(["--extend-to", "8", "--out"])
            .arg(dir.join("noop")),
    );
    let noop = fs::read_to_string(dir.join("noop/resume.csv")).unwrap();
    assert_eq!(noop.lines().count(), 2, "no-op resume should emit no rows");

    // extending 8 -> 12 reproduces the fresh run's tail rows exactly
    run_ok(
        bin()
            .args(["resume", "--checkpoint"])
            .arg(&ckpt)
            .args(["--extend-to", "12", "--out"])
            .arg(dir.join("resumed")),
    );
    let fresh = fs::read_to_string(dir.join("full/influence.csv")).unwrap();
    let resumed = fs::read_to_string(dir.join("resumed/resume.csv")).unwrap();
    let fresh_tail: Vec<&str> = fresh.lines().skip(2).skip(8).collect();
    let resumed_rows: Vec<&str> = resumed.lines().skip(2).collect();
    assert_eq!(fresh_tail, resumed_rows, "resumed rows differ from fresh run");
}

#[test]
fn fit_report_on_generated_curve() {
    let dir = tmp_dir("fit");
    let cfg = write_config(&dir, "inf.json", &influence_config(30));
    run_ok(
        bin()
            .args(["influence", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.join("run")),
    );
    let fit_cfg = write_config(
        &dir,
        "fit.json",
        &format!(
            r#"{{
  "fit": {{
    "input": "{}",
    "quantity": "S2",
    "models": ["linear", "power_law"],
    "lower_min": 0.5, "lower_max": 1.0, "window_step": 0.25,
    "upper": 3.0
  }}
}}"#,
            dir.join("run/influence.csv").display()
        ),
    );
    run_ok(
        bin()
            .args(["fit", "--config"])
            .arg(&fit_cfg)
            .arg("--out")
            .arg(dir.join("fit")),
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("fit/fit_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["quantity"], "S2");
    assert_eq!(report["models"].as_array().unwrap().len(), 2);
    let summary = report["aic"]["summary"].as_str().unwrap();
    assert!(summary.contains('/'), "summary: {summary}");
}

#[test]
fn trotter_comparison_emits_deviation_rows() {
    let dir = tmp_dir("trotter");
    let cfg = write_config(
        &dir,
        "tc.json",
        r#"{
  "influence": {
    "j": 1.0, "dt": 0.1, "h": [0.5], "g": [0.9],
    "n_t_max": 2, "bond_cap": [32],
    "renyi_orders": [2], "bipartition_mutual_info": false,
    "trotter_compare": 0.5
  }
}"#,
    );
    run_ok(
        bin()
            .args(["influence", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.join("out")),
    );
    let text = fs::read_to_string(dir.join("out/influence.csv")).unwrap();
    let dev_rows: Vec<&str> = text
        .lines()
        .filter(|l| l.contains(",trotter_dev_S2,"))
        .collect();
    assert_eq!(dev_rows.len(), 5, "one deviation row per coarse step");
    for row in dev_rows {
        let value: f64 = row.split(',').nth(11).unwrap().parse().unwrap();
        assert!((0.0..1e-2).contains(&value), "|delta S2| = {value:.3e}");
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tmp_dir("workers");
    let cfg = write_config(
        &dir,
        "grid.json",
        r#"{
  "influence": {
    "j": 1.0, "dt": 0.1, "h": [0.5, 1.0], "g": [0.0, 0.9],
    "n_t_max": 6, "bond_cap": [16],
    "renyi_orders": [2, 3], "delta_pairs": [[4, 2]],
    "bipartition_mutual_info": true
  }
}"#,
    );
    for (out_name, workers) in [("w1", "1"), ("w3", "3")] {
        run_ok(
            bin()
                .args(["influence", "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(dir.join(out_name))
                .args(["--workers", workers]),
        );
    }
    let a = fs::read(dir.join("w1/influence.csv")).unwrap();
    let b = fs::read(dir.join("w3/influence.csv")).unwrap();
    assert_eq!(a, b, "worker count changed the output bytes");
}

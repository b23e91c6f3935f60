//! Command-line acceptance: every subcommand is byte-identical across reruns
//! with a fixed seed (criterion 12), and the golden smoke run reproduces the
//! committed outputs byte for byte. Exit-code contracts are covered too.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_casg")
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("workspace root exists")
}

fn run(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .env("CASG_LOG", "error")
        .current_dir(workspace_root())
        .output()
        .expect("binary runs")
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("output dir exists")
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

/// Criterion 12: byte-identical reruns for every subcommand with a fixed
/// seed, plus the golden-config smoke run against the committed files.
#[test]
fn criterion_12_determinism_and_golden() {
    let tmp = tempfile::tempdir().unwrap();
    let root = workspace_root();
    let config = root.join("configs/golden.json");
    let config = config.to_str().unwrap();

    // estimate: identical stdout across reruns.
    let estimate_args = [
        "estimate", "--method", "casg", "--problem", "quad_k", "--k", "-1", "--sigma", "0.1",
        "--h", "1", "--at", "0,0", "--seed", "7",
    ];
    let first = run(&estimate_args);
    let second = run(&estimate_args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "estimate stdout differs across reruns");

    // sensitivity + dfo: identical files across reruns and equal to the
    // committed goldens.
    for subcommand in ["sensitivity", "dfo"] {
        let out_a = tmp.path().join(format!("{subcommand}_a"));
        let out_b = tmp.path().join(format!("{subcommand}_b"));
        for out in [&out_a, &out_b] {
            let output = run(&[subcommand, "--config", config, "--out", out.to_str().unwrap()]);
            assert!(
                output.status.success(),
                "{subcommand} failed: {}",
                String::from_utf8_lossy(&output.stderr)
            );
        }
        assert_eq!(
            read_dir_sorted(&out_a),
            read_dir_sorted(&out_b),
            "{subcommand} outputs differ across reruns"
        );
        for (name, bytes) in read_dir_sorted(&out_a) {
            let golden = std::fs::read(root.join("goldens").join(&name))
                .unwrap_or_else(|_| panic!("missing golden for {name}"));
            assert_eq!(bytes, golden, "golden mismatch for {name}");
        }
    }

    // profile over the golden runs table: identical across reruns.
    let runs = root.join("goldens/dfo_runs_sigma_1e-3.csv");
    let prof_a = tmp.path().join("prof_a");
    let prof_b = tmp.path().join("prof_b");
    for out in [&prof_a, &prof_b] {
        let output = run(&[
            "profile", "--runs", runs.to_str().unwrap(), "--tau", "0.1", "--tau", "0.001",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    assert_eq!(read_dir_sorted(&prof_a), read_dir_sorted(&prof_b));

    // history-export then history-import round trip, deterministic.
    let hist_a = tmp.path().join("hist_a");
    let hist_b = tmp.path().join("hist_b");
    for out in [&hist_a, &hist_b] {
        let output = run(&[
            "history-export", "--problem", "ackley_d4", "--n", "25", "--sigma", "0.01",
            "--seed", "3", "--out", out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    assert_eq!(read_dir_sorted(&hist_a), read_dir_sorted(&hist_b));
    let import = run(&[
        "history-import", "--input", hist_a.join("history.csv").to_str().unwrap(),
        "--canonical", "echo.csv", "--out", hist_a.to_str().unwrap(),
    ]);
    assert!(import.status.success());
    assert_eq!(
        std::fs::read(hist_a.join("history.csv")).unwrap(),
        std::fs::read(hist_a.join("echo.csv")).unwrap(),
        "canonical echo differs from the exported file"
    );

    println!("criterion 12: PASS - all subcommands byte-identical across reruns; golden outputs reproduced");
}

/// The golden smoke run finishes quickly (well under the one-minute bound).
#[test]
fn golden_smoke_is_fast() {
    let tmp = tempfile::tempdir().unwrap();
    let root = workspace_root();
    let config = root.join("configs/golden.json");
    let start = std::time::Instant::now();
    for subcommand in ["sensitivity", "dfo"] {
        let out = tmp.path().join(subcommand);
        let output = run(&[
            subcommand, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() <= 60.0, "golden smoke took {elapsed:?}");
}

#[test]
fn exit_codes_are_stable() {
    // Missing required flag: usage error 2 with usage text on stderr.
    let missing = run(&["estimate", "--method", "casg", "--problem", "quad_k", "--k", "-1", "--h", "1"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--sigma"));

    // Unknown flags are errors.
    let unknown = run(&["estimate", "--definitely-not-a-flag"]);
    assert_eq!(unknown.status.code(), Some(2));

    // Config errors exit 2: empty problem list.
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.json");
    std::fs::write(&empty, r#"{"sensitivity": {"problems": [], "methods": ["casg_exact"]}}"#)
        .unwrap();
    let out = tmp.path().join("out");
    let config_err = run(&[
        "sensitivity", "--config", empty.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(config_err.status.code(), Some(2));

    // Partial failures exit 4 with outputs still written: a diverging
    // trajectory makes every scoring cell fail.
    let partial = tmp.path().join("partial.json");
    std::fs::write(
        &partial,
        r#"{
            "sensitivity": {"problems": ["colon_ode"], "methods": ["cd"], "steps": [0.01], "n_points": 2},
            "ode_coefficients": {"alpha1": 0.1, "alpha2": 0.3, "alpha3": 60.0,
                "beta1": 0.1, "beta2": 0.3, "beta3": 0.397, "gamma": 0.139,
                "k0": 0.05, "c1": 0.01, "m0": 0.1, "m1": 0.0001}
        }"#,
    )
    .unwrap();
    let partial_out = tmp.path().join("partial_out");
    let partial_run = run(&[
        "sensitivity", "--config", partial.to_str().unwrap(),
        "--out", partial_out.to_str().unwrap(),
    ]);
    assert_eq!(partial_run.status.code(), Some(4));
    let summary = std::fs::read_to_string(partial_out.join("sensitivity_summary.json")).unwrap();
    assert!(summary.contains("failures"));

    // Numerical failures exit 3: casg on a non-power-of-two dimension.
    let numerical = run(&[
        "estimate", "--method", "casg", "--problem", "colon_ode", "--sigma", "1e-3", "--h", "0.01",
    ]);
    assert_eq!(numerical.status.code(), Some(3));

    // Success path emits machine-parseable JSON on stdout.
    let ok = run(&[
        "estimate", "--method", "ecasg", "--problem", "colon_ode", "--sigma", "1e-3", "--h", "0.01",
    ]);
    assert_eq!(ok.status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_slice(&ok.stdout).expect("stdout is json");
    assert_eq!(parsed["evaluations"], serde_json::json!(12));
}

#[test]
fn estimate_from_history_reports_model_gradient() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("hist");
    let export = run(&[
        "history-export", "--problem", "quad_well_d4", "--n", "60", "--sigma", "1e-6",
        "--seed", "5", "--out", out.to_str().unwrap(),
    ]);
    assert!(export.status.success());
    let estimate = run(&[
        "estimate", "--method", "ecasg", "--history", out.join("history.csv").to_str().unwrap(),
        "--sigma", "1e-4", "--h", "0.05", "--at", "1,1,1,1",
    ]);
    assert!(
        estimate.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&estimate.stderr)
    );
    let parsed: serde_json::Value = serde_json::from_slice(&estimate.stdout).unwrap();
    assert_eq!(parsed["evaluations"], serde_json::json!(0));
    // The quadratic's gradient at (1,1,1,1) is (1,2,3,4); the model is fitted
    // from 60 nearly noiseless samples, so the gradient should be close.
    let gradient: Vec<f64> = parsed["gradient"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (i, expect) in [1.0, 2.0, 3.0, 4.0].iter().enumerate() {
        assert!(
            (gradient[i] - expect).abs() <= 0.05 * expect,
            "gradient[{i}] = {} vs {expect}",
            gradient[i]
        );
    }
    assert!(parsed["sample_set"].is_object());
}

//! End-to-end checks of the `irsnet` binary: flag handling, config errors,
//! output formats, and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

const BIN: &str = env!("CARGO_BIN_EXE_irsnet");

const TINY_SCENARIO: &str = "[scenario]\n\
    num_pairs = 2\n\
    elements_per_surface = [2]\n\
    irs_positions = [[150.0, 0.0]]\n";

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .output()
        .expect("binary should launch")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Data rows of a CSV (skips `#` metadata and the header).
fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn convergence_trace_is_monotone_with_a_small_final_step() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, TINY_SCENARIO).unwrap();
    let out_csv = dir.path().join("trace.csv");
    let out = run(&[
        "convergence",
        "--config",
        config.to_str().unwrap(),
        "--trials",
        "1",
        "--epsilon",
        "1e-3",
        "--seed",
        "5",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));

    let text = fs::read_to_string(&out_csv).unwrap();
    let rows = data_rows(&text);
    assert!(rows.len() >= 2, "expected at least two iterations");
    let f1: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    for w in f1.windows(2) {
        assert!(
            w[1] >= w[0] - 1e-9 * w[0].abs(),
            "objective decreased: {} -> {}",
            w[0],
            w[1]
        );
    }
    let last_step = f1[f1.len() - 1] - f1[f1.len() - 2];
    assert!(
        last_step <= 1e-3,
        "final objective step {last_step} exceeds the stop threshold"
    );

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("trace.summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["experiment"], "convergence");
    assert_eq!(summary["runs"][0]["stop_reason"], "epsilon_reached");
    assert_eq!(
        summary["runs"][0]["iterations"].as_u64().unwrap() + 1,
        rows.len() as u64
    );
}

fn masked_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    data_rows(&text)
        .into_iter()
        .map(|mut fields| {
            fields.remove(8); // wall_ms, the one nondeterministic column
            fields
        })
        .collect()
}

#[test]
fn reruns_are_identical_apart_from_wall_time() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!("trials = 2\nsnr_grid_db = [15.0, 25.0]\nschemes = [\"joint\", \"phase_only\"]\n{TINY_SCENARIO}"),
    )
    .unwrap();
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    for path in [&first, &second] {
        let out = run(&[
            "snr-sweep",
            "--config",
            config.to_str().unwrap(),
            "--epsilon",
            "1e-2",
            "--max-iter",
            "30",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
    }
    assert_eq!(masked_rows(&first), masked_rows(&second));
    assert_eq!(masked_rows(&first).len(), 8); // 2 schemes × 2 points × 2 trials
}

#[test]
fn unknown_config_keys_are_rejected_by_name() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "trails = 3\n").unwrap();
    let out = run(&["snr-sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("trails"), "error does not name the key: {err}");

    fs::write(&config, "[scenario]\nnum_piars = 2\n").unwrap();
    let out = run(&["convergence", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("num_piars"), "error does not name the key: {err}");
}

#[test]
fn experiment_mismatch_and_bad_values_exit_with_config_code() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "experiment = \"irs_sweep\"\n").unwrap();
    let out = run(&["snr-sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["convergence", "--epsilon", "0", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("epsilon"));
}

#[test]
fn unwritable_output_exits_with_runtime_code() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, TINY_SCENARIO).unwrap();
    // A path under a file (not a directory) cannot be created.
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "occupied").unwrap();
    let out = run(&[
        "convergence",
        "--config",
        config.to_str().unwrap(),
        "--epsilon",
        "1e-2",
        "--max-iter",
        "5",
        "--out",
        blocker.join("out.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flags_override_config_file_keys() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!("trials = 4\nsnr_grid_db = [15.0]\nschemes = [\"joint\"]\n{TINY_SCENARIO}"),
    )
    .unwrap();
    let out_csv = dir.path().join("override.csv");
    let out = run(&[
        "snr-sweep",
        "--config",
        config.to_str().unwrap(),
        "--trials",
        "1",
        "--epsilon",
        "1e-2",
        "--max-iter",
        "20",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert_eq!(masked_rows(&out_csv).len(), 1);
}

#[test]
fn validate_passes_and_writes_a_report() {
    let dir = tempdir().unwrap();
    let report_path = dir.path().join("report.txt");
    let out = run(&[
        "validate",
        "--seeds",
        "4",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report = fs::read_to_string(&report_path).unwrap();
    assert!(report.contains("all 5 checks passed"), "{report}");
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(stdout.contains("dual_certificates"), "{stdout}");
}

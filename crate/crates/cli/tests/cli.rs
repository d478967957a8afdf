//! End-to-end runs of the installed binary: determinism, golden rows,
//! format switching, and the exit-code contract.

use std::process::Command;

fn run(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_fockdual"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8(out.stdout).expect("utf8 stdout"),
        String::from_utf8(out.stderr).expect("utf8 stderr"),
        out.status.code().expect("exit code"),
    )
}

#[test]
fn dip_scan_is_deterministic_and_dips_to_zero() {
    let (first, _, code) = run(&["dip-scan"]);
    assert_eq!(code, 0);
    let (second, _, _) = run(&["dip-scan"]);
    assert_eq!(first, second);
    assert!(first.contains(
        "{\"eta\": 5.0000000000000000e-1, \"quantum\": 0.0000000000000000e0"
    ));
}

#[test]
fn dip_scan_angle_parameterization_and_mismatch() {
    let (out, _, code) = run(&[
        "dip-scan",
        "--coupler",
        "bs",
        "--parameter",
        "theta",
        "--from",
        "0",
        "--to",
        "1.5707963267948966",
        "--steps",
        "3",
    ]);
    assert_eq!(code, 0);
    // the midpoint angle lands within one ulp of the balanced splitter
    assert!(out.contains("\"eta\": 5.0000000000000011e-1, \"quantum\": 4.9303806576313238e-32"));

    let (_, err, code) = run(&["dip-scan", "--coupler", "bs", "--parameter", "gain"]);
    assert_eq!(code, 2);
    assert!(err.contains("does not apply"));
}

#[test]
fn pair_dist_pins_the_suppressed_order() {
    let (out, _, code) = run(&["pair-dist", "--gain", "2", "--orders", "4"]);
    assert_eq!(code, 0);
    assert!(out.contains("{\"n\": 0, \"probability\": 2.5000000000000000e-1}"));
    assert!(out.contains("{\"n\": 1, \"probability\": 0.0000000000000000e0}"));
    assert!(out.contains("\"total\": 1.0000000000000000e0"));

    // decibel parameterization resolves back to (nearly) gain two
    let (out, _, code) = run(&["pair-dist", "--db", "7.65551370675726", "--orders", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"gain\": 1.9999999999999996e0"));

    let (_, _, code) = run(&["pair-dist", "--orders", "4"]);
    assert_eq!(code, 2);
}

#[test]
fn pair_dist_csv_format() {
    let args = ["pair-dist", "--gain", "3", "--orders", "5", "--format", "csv"];
    let (out, _, code) = run(&args);
    assert_eq!(code, 0);
    assert!(out.starts_with("# command: pair-dist\n"));
    assert!(out.contains("\nn,probability\n"));
    assert!(out.contains("\n2,0.0000000000000000e0\n"));
    let (again, _, _) = run(&args);
    assert_eq!(out, again);
}

#[test]
fn pair_dist_zero_orders_is_a_single_row() {
    let (out, _, code) = run(&["pair-dist", "--gain", "2", "--orders", "0"]);
    assert_eq!(code, 0);
    assert_eq!(out.matches("\"n\": ").count(), 1);
    assert!(out.contains("{\"n\": 0, \"probability\": 2.5000000000000000e-1}"));
    assert!(out.contains("\"tail_mass\": 7.5000000000000000e-1"));
}

#[test]
fn duality_sweep_and_table() {
    let (out, _, code) = run(&["duality-check", "--max-photons", "3"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"tolerance\": 1.0000000000000001e-9"));

    let (out, _, code) = run(&["duality-check", "--table", "--gain", "2"]);
    assert_eq!(code, 0);
    assert_eq!(out.matches("\"label\": ").count(), 5);
    assert!(out.contains("\"pdc_value\": 7.0710678118654757e-1"));
    assert!(out.contains("\"pdc_value\": -5.0000000000000011e-1"));

    let (out, _, code) = run(&["duality-check", "--gain", "1", "--max-photons", "2"]);
    assert_eq!(code, 0, "identity gain fails: {out}");
}

#[test]
fn experiment_runs_deterministically_to_a_quantum_verdict() {
    let path = std::env::temp_dir().join(format!("fockdual_exp_{}.toml", std::process::id()));
    std::fs::write(&path, "gain = 2.0\nshots = 100000\nseed = 4\n").unwrap();
    let args = ["experiment", "--config", path.to_str().unwrap()];
    let (out, _, code) = run(&args);
    assert_eq!(code, 0);
    assert!(out.contains("\"verdict\": \"QUANTUM\""));
    assert!(out.contains("\"coincidences\": 0"));
    let (again, _, _) = run(&args);
    assert_eq!(out, again);
    std::fs::remove_file(&path).ok();
}

#[test]
fn experiment_rejects_broken_configs() {
    let dir = std::env::temp_dir();
    let bad = dir.join(format!("fockdual_bad_{}.toml", std::process::id()));
    std::fs::write(&bad, "gain = 2.0\nshots = \n").unwrap();
    let (_, err, code) = run(&["experiment", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "no line diagnostic in: {err}");

    let ambiguous = dir.join(format!("fockdual_amb_{}.toml", std::process::id()));
    std::fs::write(&ambiguous, "gain = 2.0\nsqueezing = 0.5\nshots = 10\n").unwrap();
    let (_, _, code) = run(&["experiment", "--config", ambiguous.to_str().unwrap()]);
    assert_eq!(code, 2);

    let unknown = dir.join(format!("fockdual_unk_{}.toml", std::process::id()));
    std::fs::write(&unknown, "gain = 2.0\nshots = 10\nshotz = 1\n").unwrap();
    let (_, _, code) = run(&["experiment", "--config", unknown.to_str().unwrap()]);
    assert_eq!(code, 2);

    let (_, _, code) = run(&["experiment", "--config", "/nonexistent/x.toml"]);
    assert_eq!(code, 2);
    for p in [bad, ambiguous, unknown] {
        std::fs::remove_file(p).ok();
    }
}

#[test]
fn retro_check_exit_codes() {
    let (out, _, code) = run(&["retro-check", "--gain", "2", "--max-photons", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"unreachable_outcomes\": 0"));
    assert!(out.contains("\"cutoff\": 48"));

    // a starved window separates the two inference routes
    let (_, err, code) = run(&["retro-check", "--gain", "3", "--cutoff", "12"]);
    assert_eq!(code, 3);
    assert!(err.contains("error"));
}

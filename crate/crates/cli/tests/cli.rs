//! End-to-end tests of the `crgeo` binary: subcommands, exit codes, model
//! files and report shape.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn crgeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crgeo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON: {e}\nstdout: {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn check_soliton_passes_and_exits_zero() {
    let out = crgeo(&[
        "check-soliton",
        "--model",
        "heisenberg_gaussian",
        "--mu",
        "1",
        "--seed",
        "7",
        "--samples",
        "64",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["schema"], "crgeo-report/1");
    assert_eq!(v["pass"], true);
    let checks = v["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for c in checks {
        assert!(c["max_residual"].as_f64().unwrap() < 1e-9);
        assert!(c["anchor"].is_string());
    }
}

#[test]
fn curvature_emits_the_scalar_package() {
    let out = crgeo(&["curvature", "--model", "cr_sphere", "--point", "0.1,0.2,0.3"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    for key in ["w", "a11_max", "q11_max", "r1_max", "q"] {
        assert!(v["values"][key].is_number(), "missing {key}");
    }
    assert!((v["values"]["w"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn failing_check_exits_one() {
    // x^3 is not a pseudo-gradient potential.
    let root = workspace_root();
    let bad = root.join("target/test-bad-potential.model");
    let text = std::fs::read_to_string(root.join("models/heisenberg_gaussian.model"))
        .unwrap()
        .replace("mu*(x^2+y^2)", "x^3");
    std::fs::write(&bad, text).unwrap();
    let out = crgeo(&[
        "check-soliton",
        "--model-file",
        bad.to_str().unwrap(),
        "--mu",
        "0",
        "--samples",
        "32",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn load_failure_exits_three() {
    let root = workspace_root();
    let bad = root.join("target/test-bad-frame.model");
    let text = std::fs::read_to_string(root.join("models/heisenberg.model"))
        .unwrap()
        .replace("\"1\",\"0\",\"y\"", "\"0.5\",\"0\",\"0.5*y\"");
    std::fs::write(&bad, text).unwrap();
    let out = crgeo(&["validate", "--model-file", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("expected 2, got 1"), "stderr: {err}");
}

#[test]
fn usage_error_exits_two() {
    let out = crgeo(&["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn model_file_reports_match_builtin_bit_for_bit() {
    let root = workspace_root();
    for name in ["heisenberg", "cr_sphere", "heisenberg_gaussian"] {
        let file = root.join(format!("models/{name}.model"));
        let a = crgeo(&[
            "validate",
            "--model",
            name,
            "--samples",
            "32",
        ]);
        let b = crgeo(&[
            "validate",
            "--model-file",
            file.to_str().unwrap(),
            "--samples",
            "32",
        ]);
        assert!(a.status.success() && b.status.success());
        // identical checks and values; the model name differs only if the
        // file stem does, which it does not here
        assert_eq!(a.stdout, b.stdout, "{name}: builtin vs file report");
    }
}

#[test]
fn level_sets_table_matches_the_flat_soliton() {
    let out = crgeo(&[
        "level-sets",
        "--model",
        "heisenberg_gaussian",
        "--mu",
        "1",
        "--lambda",
        "1",
        "--levels",
        "0.5,1,2",
        "--samples",
        "16",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["pass"], true);
    let checks = v["checks"].as_array().unwrap();
    let k = checks.iter().find(|c| c["name"] == "gauss_curvature").unwrap();
    assert!(k["max_residual"].as_f64().unwrap() < 1e-7);
    let ii = checks.iter().find(|c| c["name"] == "ii_e2e3").unwrap();
    assert!(ii["max_residual"].as_f64().unwrap() < 1e-7);
}

#[test]
fn critical_set_reports_the_axis() {
    let out = crgeo(&[
        "critical-set",
        "--model",
        "heisenberg_gaussian",
        "--mu",
        "1",
        "--grid",
        "48",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    let notes = v["notes"].as_array().unwrap();
    let text: Vec<&str> = notes.iter().filter_map(|n| n.as_str()).collect();
    assert!(text.iter().any(|n| n.contains("dimension 1, tag line")), "{text:?}");
    assert!(text.iter().any(|n| n.contains("case (ii)") && n.contains("R^3")), "{text:?}");
}

#[test]
fn text_mode_prints_a_table() {
    let out = crgeo(&["validate", "--model", "heisenberg", "--samples", "16", "--text"]);
    assert!(out.status.success());
    let s = String::from_utf8_lossy(&out.stdout);
    assert!(s.contains("[PASS]"));
    assert!(s.contains("overall: PASS"));
}

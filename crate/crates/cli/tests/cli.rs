use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn divgauge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divgauge"))
        .args(args)
        .env_remove("DIVGAUGE_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn figure_k_minimum_gap_matches_constant() {
    for (sigma, n) in [("1", "1"), ("0.5", "100")] {
        let v = json(&divgauge(&["figure-k", "--sigma", sigma, "--n", n, "--mi-grid", "0:10:0.01"]));
        let r = &v["result"];
        let scaled = r["min_gap_over_unit"].as_f64().unwrap();
        assert!((scaled - 1.5653).abs() <= 1e-3, "{scaled}");
        assert_eq!(r["rows"].as_array().unwrap().len(), 1001);
    }
}

#[test]
fn figure_k_csv_has_header_and_columns() {
    let out = divgauge(&["figure-k", "--mi-grid", "0:1:0.5", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines[0], "mi,ours,competitor,gap");
    assert_eq!(lines.len(), 4);
    assert!(text.starts_with("# command=figure-k"));
    // Shortest round-trip decimals.
    let gap: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    assert!(gap > 0.0);
}

#[test]
fn verify_all_passes_at_small_scale() {
    let out = divgauge(&["verify", "--suite", "all", "--seed", "42", "--trials", "20"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let reports = v["result"].as_array().unwrap();
    assert!(!reports.is_empty());
    for r in reports {
        assert_eq!(r["violations"], 0, "{r}");
        assert_eq!(r["seed"], 42);
    }
}

#[test]
fn negative_control_reports_violations_internally() {
    // The suite inverts its verdict, so a caught corruption exits cleanly.
    let out = divgauge(&["verify", "--suite", "negative-control", "--trials", "20"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn div_on_equal_laws_is_zero() {
    let dir = TempDir::new().unwrap();
    let pair = write(&dir, "pair.json", r#"{"p": {"probs": [0.2, 0.3, 0.5]}, "q": {"probs": [0.2, 0.3, 0.5]}}"#);
    let v = json(&divgauge(&["div", "--pair", &pair]));
    for row in v["result"].as_array().unwrap() {
        let value = row["value"].as_f64().unwrap();
        match row["params"]["gamma"].as_f64() {
            // E_gamma(P || P) = 1 - gamma below one.
            Some(g) if g < 1.0 => assert!((value - (1.0 - g)).abs() < 1e-15),
            _ => assert_eq!(value, 0.0, "{row}"),
        }
    }
    let v = json(&divgauge(&["div", "--pair", &pair, "--kind", "renyi", "--alpha", "3"]));
    assert_eq!(v["result"][0]["value"].as_f64().unwrap(), 0.0);
}

#[test]
fn bad_input_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"p\": {\"probs\": [0.5, 0.5]},\n \"q\": {\"probs\": [0.5 0.5]}}");
    let out = divgauge(&["div", "--pair", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");

    let dominated = write(&dir, "dom.json", r#"{"p": {"probs": [0.5, 0.5]}, "q": {"probs": [1.0, 0.0]}}"#);
    assert_eq!(divgauge(&["div", "--pair", &dominated]).status.code(), Some(2));
    let unknown = write(&dir, "unk.json", r#"{"p": {"probs": [1.0]}, "q": {"probs": [1.0]}, "r": 1}"#);
    assert_eq!(divgauge(&["div", "--pair", &unknown]).status.code(), Some(2));
    assert_eq!(divgauge(&["bound", "--name", "chi2", "--q", "1.5", "--div", "0.3"]).status.code(), Some(2));
    assert_eq!(divgauge(&["figure-k", "--mi-grid", "1:0:0.1"]).status.code(), Some(2));
    assert_eq!(divgauge(&["div", "--pair", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn bound_matches_library_value() {
    let v = json(&divgauge(&["bound", "--name", "chi2", "--q", "0.1", "--div", "0.3"]));
    let expected = 0.1 + (0.1f64 * 0.9 * 0.3).sqrt();
    assert!((v["result"]["raw"].as_f64().unwrap() - expected).abs() < 1e-15);
}

#[test]
fn compare_rows_carry_truth() {
    let dir = TempDir::new().unwrap();
    let pair = write(&dir, "pair.json", r#"{"p": {"probs": [0.4, 0.4, 0.2]}, "q": {"probs": [0.2, 0.3, 0.5]}}"#);
    let v = json(&divgauge(&["compare", "--pair", &pair, "--event", "0b011", "--table1"]));
    let truth = v["result"]["p_event"].as_f64().unwrap();
    assert!((truth - 0.8).abs() < 1e-15);
    for row in v["result"]["rows"].as_array().unwrap() {
        if let Some(ours) = row["ours"].as_f64() {
            assert!(ours >= truth - 1e-9, "{row}");
        }
    }
    let v = json(&divgauge(&["compare", "--pair", &pair, "--event", "0b011"]));
    for b in v["result"]["bounds"].as_array().unwrap() {
        if b["preconditions"].as_object().unwrap().values().all(|x| x == true) {
            assert!(b["raw"].as_f64().unwrap() >= truth - 1e-9, "{b}");
        }
    }
}

#[test]
fn experiment_and_genbound_agree_on_soundness() {
    let dir = TempDir::new().unwrap();
    let exp = write(
        &dir,
        "exp.json",
        r#"{"n": 4, "p_z": [0.5, 0.5], "loss": [[0.0, 1.0], [1.0, 0.0]], "a": 0.0, "b": 1.0, "temperature": "inf"}"#,
    );
    let out = divgauge(&["experiment", "--config", &exp]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&divgauge(&["genbound", "--experiment", &exp, "--eta-grid", "0.1:1:0.1"]));
    for row in v["result"]["rows"].as_array().unwrap() {
        assert!(row["exact_tail"].as_f64().unwrap() <= row["min"].as_f64().unwrap() + 1e-9);
    }
    let panel = write(&dir, "panel.json", r#"{"chi2": 0.3, "h2": 0.05}"#);
    let v = json(&divgauge(&["genbound", "--sigma", "1", "--n", "100", "--div-file", &panel, "--eta-grid", "0.05:1:0.05"]));
    assert_eq!(v["result"]["rows"].as_array().unwrap().len(), 20);
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let path = dir.path().join(name);
        let p = path.to_str().unwrap();
        let mut args = vec!["verify", "--suite", "master", "--trials", "30", "--seed", "7", "--out", p];
        args.extend_from_slice(extra);
        assert_eq!(divgauge(&args).status.code(), Some(0));
        std::fs::read(Path::new(p)).unwrap()
    };
    let a = run("a.json", &["--jobs", "1"]);
    let b = run("b.json", &["--jobs", "4"]);
    let a_text = String::from_utf8(a.clone()).unwrap();
    let b_text = String::from_utf8(b).unwrap();
    // Only the echoed output path differs.
    assert_eq!(a_text.replace("a.json", "x"), b_text.replace("b.json", "x"));
    assert_eq!(a, run("a.json", &["--jobs", "1"]));
}

#[test]
fn seed_falls_back_to_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_divgauge"))
        .args(["verify", "--suite", "identities", "--trials", "10"])
        .env("DIVGAUGE_SEED", "9")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["seed"], 9);
}

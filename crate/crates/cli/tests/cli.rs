use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn blaschke(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blaschke"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_json(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.to_str().unwrap().to_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn h2_half(task: &str) -> Value {
    json!({
        "name": "h2-half",
        "task": task,
        "space": { "type": "dirichlet", "alpha": 0.0 },
        "multiset": { "origin": 0, "points": [ { "point": [0.5, 0.0], "mult": 1 } ] },
        "output": { "profile": "h2-half.csv" }
    })
}

#[test]
fn rf_preset_prints_four_matching_blocks() {
    let out = blaschke(&["preset", "paper-Rf-example"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let blocks = report["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 4);
    let sizes: Vec<usize> = blocks
        .iter()
        .map(|b| b["data"]["elements"].as_array().unwrap().len())
        .collect();
    assert_eq!(sizes, [3, 5, 7, 4]);
    assert!(blocks.iter().all(|b| b["data"]["matches"] == json!(true)));
}

#[test]
fn verify_writes_report_and_profile_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(dir.path(), "cfg.json", &h2_half("verify"));
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for d in [&out_a, &out_b] {
        let out = blaschke(&["verify", "--config", &cfg, "--out", d.to_str().unwrap(), "--quiet"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty() && out.stderr.is_empty());
    }
    for f in ["h2-half.json", "h2-half.csv"] {
        let a = std::fs::read(out_a.join(f)).unwrap();
        assert_eq!(a, std::fs::read(out_b.join(f)).unwrap(), "{f} differs between runs");
    }
    let report = read_json(&out_a.join("h2-half.json"));
    assert_eq!(report["success"], json!(true));
    assert_eq!(report["verdicts"].as_array().unwrap().len(), 2);

    let csv = std::fs::read_to_string(out_a.join("h2-half.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "theta,modulus");
    assert_eq!(lines.len(), 513);
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
    // normalized to coefficient 1 at the origin, the factor has modulus 2 on the circle
    for row in &lines[1..] {
        let modulus: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((modulus - 2.0).abs() < 1e-12, "{row}");
    }
}

#[test]
fn saved_construction_can_be_verified() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = h2_half("construct");
    cfg["output"] = json!({ "report": dir.path().join("built.json") });
    let path = write_json(dir.path(), "construct.json", &cfg);
    assert!(blaschke(&["construct", "--config", &path, "--quiet"]).status.success());
    let built = read_json(&dir.path().join("built.json"));
    let construction = write_json(dir.path(), "construction.json", &built["blocks"][0]["data"]);

    let mut verify = h2_half("verify");
    verify["construction"] = json!(construction);
    verify["output"] = json!({});
    let path = write_json(dir.path(), "verify.json", &verify);
    let out = blaschke(&["verify", "--config", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["success"], json!(true));
}

#[test]
fn failing_verdict_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "name": "z-vs-z2",
        "task": "subspace",
        "space": { "type": "dirichlet", "alpha": 0.0 },
        "polynomial": { "leading": [1.0, 0.0], "roots": [ { "point": [0.0, 0.0], "mult": 1 } ] },
        "other_polynomial": { "leading": [1.0, 0.0], "roots": [ { "point": [0.0, 0.0], "mult": 2 } ] },
        "expect_equal": true
    });
    let path = write_json(dir.path(), "s.json", &cfg);
    let out = blaschke(&["subspace", "--config", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[FAIL] z-vs-z2: expected_equality"));
}

#[test]
fn config_errors_exit_with_two_and_locate_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(
        &p,
        "{\n  \"task\": \"verify\",\n  \"space\": { \"type\": \"dirichlet\", \"alpha\": \"high\" }\n}\n",
    )
    .unwrap();
    let out = blaschke(&["verify", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("`space`") && err.contains("line 4") && err.contains("expected f64"),
        "{err}"
    );

    let path = write_json(dir.path(), "zeros.json", &h2_half("zeros"));
    let out = blaschke(&["verify", "--config", &path]);
    assert_eq!(out.status.code(), Some(2));

    let out = blaschke(&["verify", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_required_field_is_reported_as_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({ "name": "no-poly", "task": "extremal", "space": { "type": "dirichlet", "alpha": 0.0 } });
    let path = write_json(dir.path(), "e.json", &cfg);
    let out = blaschke(&["extremal", "--config", &path]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["errors"][0].as_str().unwrap().contains("needs a polynomial"));
}

#[test]
fn batch_runs_every_experiment_and_seed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let extremal = |name: &str| {
        json!({
            "name": name,
            "task": "extremal",
            "space": { "type": "dirichlet", "alpha": -1.0 },
            "polynomial": { "leading": [1.0, 0.0], "roots": [ { "point": [0.5, 0.0], "mult": 1 } ] },
            "samples": 2000,
            "M": 40,
            "seed": 5
        })
    };
    let batch = json!({ "experiments": [extremal("first"), extremal("second"), h2_half("verify")] });
    let path = write_json(dir.path(), "batch.json", &batch);
    let out_dir = dir.path().join("out");
    let out = blaschke(&[
        "batch",
        "--config",
        &path,
        "--out",
        out_dir.to_str().unwrap(),
        "--seed",
        "11",
        "--quiet",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = read_json(&out_dir.join("first.json"));
    let second = read_json(&out_dir.join("second.json"));
    assert_eq!(first["config"]["seed"], json!(11));
    assert_eq!(first["blocks"], second["blocks"]);
    assert_eq!(first["blocks"][0]["data"]["seed"], json!(11));
    assert!(out_dir.join("h2-half.json").is_file() && out_dir.join("h2-half.csv").is_file());

    let dup = json!([extremal("same"), extremal("same")]);
    let path = write_json(dir.path(), "dup.json", &dup);
    assert_eq!(blaschke(&["batch", "--config", &path]).status.code(), Some(2));
}

#[test]
fn oracle_agrees_with_the_construction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "name": "oracle",
        "task": "oracle",
        "space": { "type": "dirichlet", "alpha": -1.0 },
        "polynomial": { "leading": [1.0, 0.0], "roots": [ { "point": [0.5, 0.0], "mult": 1 } ] },
        "M": 400
    });
    let path = write_json(dir.path(), "o.json", &cfg);
    let out = blaschke(&["oracle", "--config", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn heavy_weight_scan_preset_finds_extraneous_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "name": "scan",
        "task": "preset",
        "space": { "type": "dirichlet", "alpha": -6.0 },
        "scan": { "moduli": [0.8], "angles": 4 },
        "comparison_tolerance": 1e-7
    });
    let path = write_json(dir.path(), "scan.json", &cfg);
    let out = blaschke(&["preset", "extraneous-scan", "--config", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let scan = &report["blocks"][0]["data"];
    assert_eq!(scan["found"], json!(true));
    assert_eq!(scan["signature"].as_str().unwrap().len(), 64);
}

#[test]
fn unknown_preset_is_rejected_by_the_parser() {
    let out = blaschke(&["preset", "no-such-preset"]);
    assert_eq!(out.status.code(), Some(2));
}

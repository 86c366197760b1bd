use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lpstab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpstab"))
        .args(args)
        .current_dir(dir)
        .env("LPSTAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn entry_lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().filter(|l| l.trim_start().starts_with('[') && l.contains(',')).count()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn gen_entry_counts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    assert!(lpstab(dir.path(), &["gen", "random-walk", "--n", "200", "--out", "rw.json"]).status.success());
    assert_eq!(entry_lines(&dir.path().join("rw.json")), 598);
    assert!(lpstab(dir.path(), &["gen", "staircase", "--p", "1", "--N", "16", "--out", "s.json"]).status.success());
    assert_eq!(entry_lines(&dir.path().join("s.json")), 136);
    for name in ["d1.json", "d2.json"] {
        assert!(lpstab(dir.path(), &["gen", "dilation", "--n", "8", "--lambda", "1.2", "--out", name]).status.success());
    }
    let d1 = std::fs::read(dir.path().join("d1.json")).unwrap();
    assert_eq!(d1, std::fs::read(dir.path().join("d2.json")).unwrap());
    for name in ["b1.json", "b2.json"] {
        let out = lpstab(dir.path(), &["gen", "banded", "--n", "30", "--r", "2", "--seed", "5", "--out", name]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(dir.path().join("b1.json")).unwrap(), std::fs::read(dir.path().join("b2.json")).unwrap());
}

#[test]
fn written_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert!(lpstab(dir.path(), &["gen", "poly-decay", "--n", "40", "--beta", "2.5", "--out", "p.json"]).status.success());
    let path = dir.path().join("p.json");
    let text = std::fs::read_to_string(&path).unwrap();
    let a = lpstab_core::format::read_matrix_str(&text).unwrap();
    assert_eq!(lpstab_core::format::write_matrix_string(&a).unwrap(), text);
}

#[test]
fn analyze_identity_and_walk() {
    let dir = tempfile::tempdir().unwrap();
    lpstab(dir.path(), &["gen", "identity", "--n", "12", "--out", "i.json"]);
    let out = lpstab(dir.path(), &["analyze", "i.json", "--json"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["norms"]["schur"], 2.0);
    assert_eq!(v["stats"]["thickness"], 0.0);
    assert!(dir.path().join("analyze.json").exists());

    lpstab(dir.path(), &["gen", "random-walk", "--n", "50", "--out", "rw.json"]);
    let v = stdout_json(&lpstab(dir.path(), &["analyze", "rw.json", "--json"]));
    assert_eq!(v["stats"]["band_width"], 1.0);
    assert_eq!(v["norms"]["schur"], 4.0);
    assert_eq!(v["checks"]["gram_banded"]["banded"], true);
}

#[test]
fn lambda_reports() {
    let dir = tempfile::tempdir().unwrap();
    lpstab(dir.path(), &["gen", "identity", "--n", "10", "--out", "i.json"]);
    let out = lpstab(dir.path(), &["lambda", "i.json", "--json"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "uniformly_bounded_below");
    for e in v["estimates"].as_array().unwrap() {
        assert!((e["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    assert_eq!(v["constants"]["integer_line_k"], 18.0);
    assert_eq!(v["constants"]["zrem2_denominator"], 162.0);
    assert_eq!(v["constants"]["alpha"], 6.0);
    let csv = std::fs::read_to_string(dir.path().join("lambda.csv")).unwrap();
    assert!(csv.starts_with("p,lambda_hat,method,witness_support_radius,seed\n"));

    lpstab(dir.path(), &["gen", "staircase", "--p", "1", "--N", "16", "--out", "s.json"]);
    let v = stdout_json(&lpstab(dir.path(), &["lambda", "s.json", "--json", "--p-grid", "1,2,inf"]));
    let est = v["estimates"].as_array().unwrap();
    assert!((est[0]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(est[2]["value"].as_f64().unwrap() <= 1.0 / 16.0 + 1e-15);
}

#[test]
fn lambda_window_sweep_on_the_walk() {
    let dir = tempfile::tempdir().unwrap();
    lpstab(dir.path(), &["gen", "random-walk", "--n", "80", "--out", "rw.json"]);
    let out = lpstab(dir.path(), &["lambda", "rw.json", "--windows", "20,40,80", "--p-grid", "1,2,inf", "--json"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    let l2: Vec<f64> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w["report"]["estimates"].as_array().unwrap().iter().find(|e| e["p"] == 2.0).unwrap()["value"].as_f64().unwrap())
        .collect();
    for (k, n) in [20.0f64, 40.0, 80.0].iter().enumerate() {
        assert!((l2[k] - (1.0 - (std::f64::consts::PI / (n + 1.0)).cos())).abs() < 1e-12);
    }
    assert!(l2[0] / l2[1] > 3.5 && l2[1] / l2[2] > 3.5);
}

#[test]
fn partial_grid_needs_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    lpstab(dir.path(), &["gen", "identity", "--n", "5", "--out", "i.json"]);
    assert_eq!(lpstab(dir.path(), &["lambda", "i.json", "--p-grid", "1.5,3"]).status.code(), Some(2));
    let out = lpstab(dir.path(), &["lambda", "i.json", "--p-grid", "1.5,3", "--partial-grid", "--json"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["estimates"].as_array().unwrap().len(), 2);
    assert_eq!(lpstab(dir.path(), &["lambda", "i.json", "--p-grid", "0.05,1,2,inf"]).status.code(), Some(2));
}

#[test]
fn invert_identity_emits_identity() {
    let dir = tempfile::tempdir().unwrap();
    lpstab(dir.path(), &["gen", "identity", "--n", "6", "--out", "i.json"]);
    let out = lpstab(dir.path(), &["invert", "i.json", "--emit-inverse"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(dir.path().join("inverse.json")).unwrap(), std::fs::read(dir.path().join("i.json")).unwrap());
}

#[test]
fn invert_walk_is_degenerate_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    lpstab(dir.path(), &["gen", "random-walk", "--n", "64", "--out", "rw.json"]);
    let out = lpstab(dir.path(), &["invert", "rw.json", "--windows", "16,32,64", "--p-grid", "1,2,inf", "--json"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["verdict"], "degenerate");
}

#[test]
fn localize_writes_certificates() {
    let dir = tempfile::tempdir().unwrap();
    lpstab(dir.path(), &["gen", "banded", "--n", "200", "--r", "2", "--out", "b.json"]);
    let f: Vec<f64> = (0..200).map(|x| ((x as f64) / 7.0).sin()).collect();
    std::fs::write(dir.path().join("f.json"), serde_json::to_string(&f).unwrap()).unwrap();
    let f_path = dir.path().join("f.json");
    let out = lpstab(dir.path(), &["localize", "b.json", "--f", f_path.to_str().unwrap(), "--length", "8,16", "--p", "inf", "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    for item in v.as_array().unwrap() {
        assert_eq!(item["result"]["integer_line"]["holds"], true);
    }
}

#[test]
fn verify_sequences_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Value> = (0..2)
        .map(|_| {
            let out = lpstab(dir.path(), &["verify", "--suite", "sequences", "--seed", "7", "--json"]);
            assert_eq!(out.status.code(), Some(0));
            let mut v = stdout_json(&out);
            for r in v.as_array_mut().unwrap() {
                r.as_object_mut().unwrap().remove("elapsed_secs");
            }
            v
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn corrupted_matrix_produces_a_dump() {
    let dir = tempfile::tempdir().unwrap();
    let bad = r#"{"space":{"kind":"z_interval","n":3},"rows":"same","entries":[[0,0,1],[0,0,2]]}"#;
    std::fs::write(dir.path().join("bad.json"), bad).unwrap();
    let bad_path = dir.path().join("bad.json");
    let out = lpstab(dir.path(), &["verify", "--suite", "zoo", "--matrix", bad_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let dump: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("counterexample-matrix.json")).unwrap()).unwrap();
    assert_eq!(dump["case"]["content"], bad);
    assert!(dump["case"]["error"].as_str().unwrap().contains("duplicate"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lpstab(dir.path(), &["gen", "no-such-generator", "--out", "x.json"]).status.code(), Some(2));
    assert_eq!(lpstab(dir.path(), &["gen", "staircase", "--out", "x.json"]).status.code(), Some(2));
    std::fs::write(dir.path().join("broken.json"), "{\"space\": ").unwrap();
    assert_eq!(lpstab(dir.path(), &["analyze", "broken.json"]).status.code(), Some(2));
    assert_eq!(lpstab(dir.path(), &["verify", "--suite", "nope"]).status.code(), Some(2));
    lpstab(dir.path(), &["gen", "identity", "--n", "3001", "--out", "big.json"]);
    let out = lpstab(dir.path(), &["lambda", "big.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--windows"));
}

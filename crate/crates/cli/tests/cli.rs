use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn kundt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kundt")).args(args).output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn passing_metrics_exit_zero() {
    for (file, extra) in [
        ("minkowski.kundt", vec![]),
        ("ppwave.kundt", vec![]),
        ("twisted.kundt", vec![]),
        ("sphere.kundt", vec!["--x-range", "0.3,2.5"]),
    ] {
        for cmd in ["validate", "curvature", "oracle-compare", "invariants"] {
            let mut args = vec!["--no-timestamp", "--points", "20"];
            args.extend(&extra);
            let path = data(file);
            args.extend([cmd, path.as_str()]);
            let out = kundt(&args);
            assert_eq!(
                out.status.code(),
                Some(0),
                "{cmd} {file}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            let v = json(&out);
            assert_eq!(v["command"], cmd);
            assert!(v.get("timestamp").is_none());
        }
    }
}

#[test]
fn failing_checks_exit_one() {
    let out = kundt(&[
        "--points",
        "20",
        "killing-check",
        &data("minkowski.kundt"),
        "--candidate",
        &data("notkilling.kv"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
    assert!(json(&out).get("timestamp").is_some());

    let out = kundt(&[
        "--points",
        "20",
        "killing-check",
        &data("sphere.kundt"),
        "--candidate",
        &data("translation.kv"),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(kundt(&["validate", "/nonexistent.kundt"]).status.code(), Some(2));
    assert_eq!(kundt(&["case", "build", "9.9"]).status.code(), Some(2));
    assert_eq!(
        kundt(&["case", "build", "1.12", "--bind", "nope=x3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        kundt(&["--points", "zero", "validate", &data("minkowski.kundt")])
            .status
            .code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.kundt");
    std::fs::write(&bad, "dimension = 4\nH = \"x3 +\"\n").unwrap();
    let out = kundt(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let args = [
        "--no-timestamp",
        "--seed",
        "5",
        "--points",
        "25",
        "invariants",
        &data("twisted.kundt"),
    ];
    assert_eq!(kundt(&args).stdout, kundt(&args).stdout);
    let other = [
        "--no-timestamp",
        "--seed",
        "6",
        "--points",
        "25",
        "invariants",
        &data("twisted.kundt"),
    ];
    assert_ne!(kundt(&args).stdout, kundt(&other).stdout);
}

#[test]
fn instance_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("case.json");
    let inst = inst.to_str().unwrap();
    let out = kundt(&[
        "--no-timestamp",
        "--points",
        "30",
        "case",
        "build",
        "2.26",
        "--random",
        "3",
        "--out",
        inst,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = kundt(&["--no-timestamp", "--points", "30", "killing-check", inst]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("type C"));
    let out = kundt(&["--no-timestamp", "--points", "30", "validate", inst]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn worked_example_and_case_list() {
    let out = kundt(&["--no-timestamp", "--points", "30", "example-7-3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = kundt(&["--no-timestamp", "case", "list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for id in ["1.11", "2.26", "N2.2"] {
        assert!(text.contains(id), "{id} missing from case list");
    }
}

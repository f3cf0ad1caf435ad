use std::path::Path;
use std::process::{Command, Output};

fn bqco(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bqco")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = bqco(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn pipeline_runs_end_to_end_and_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["a.jsonl", "b.jsonl"] {
        ok(&["generate", "--problem", "cvrp", "--n", "7", "--count", "20", "--seed", "3", "--out", &p(d, name)]);
    }
    assert_eq!(std::fs::read(d.join("a.jsonl")).unwrap(), std::fs::read(d.join("b.jsonl")).unwrap());

    ok(&["solve-exact", "--input", &p(d, "a.jsonl"), "--out", &p(d, "exact.jsonl")]);
    ok(&[
        "make-dataset",
        "--problem",
        "cvrp",
        "--n",
        "7",
        "--count",
        "60",
        "--seed",
        "4",
        "--out",
        &p(d, "train.jsonl"),
    ]);
    ok(&[
        "make-dataset",
        "--problem",
        "cvrp",
        "--n",
        "7",
        "--count",
        "20",
        "--seed",
        "5",
        "--out",
        &p(d, "held.jsonl"),
    ]);
    for name in ["m1.json", "m2.json"] {
        ok(&[
            "train",
            "--dataset",
            &p(d, "train.jsonl"),
            "--held-out",
            &p(d, "held.jsonl"),
            "--out",
            &p(d, name),
            "--epochs",
            "2",
            "--batch-size",
            "16",
            "--d-model",
            "16",
            "--heads",
            "2",
            "--d-ff",
            "16",
            "--layers",
            "1",
            "--metrics",
            &p(d, "metrics.jsonl"),
        ]);
    }
    assert_eq!(std::fs::read(d.join("m1.json")).unwrap(), std::fs::read(d.join("m2.json")).unwrap());
    assert_eq!(std::fs::read_to_string(d.join("metrics.jsonl")).unwrap().lines().count(), 2);

    let model = p(d, "m1.json");
    let held = p(d, "held.jsonl");
    ok(&["eval", "--model", &model, "--input", &held, "--out", &p(d, "greedy.jsonl")]);
    ok(&["eval", "--model", &model, "--input", &held, "--out", &p(d, "beam1.jsonl"), "--beam", "1"]);
    ok(&["eval", "--model", &model, "--input", &held, "--out", &p(d, "knn.jsonl"), "--knn", "50"]);
    ok(&["eval", "--model", &model, "--input", &held, "--out", &p(d, "beam4.jsonl"), "--beam", "4", "--knn", "3"]);
    let greedy = std::fs::read(d.join("greedy.jsonl")).unwrap();
    assert_eq!(greedy, std::fs::read(d.join("beam1.jsonl")).unwrap());
    assert_eq!(greedy, std::fs::read(d.join("knn.jsonl")).unwrap());

    let table = ok(&["bench", "--model", &model, "--input", &held, "--beams", "1,4"]);
    assert!(table.contains("greedy") && table.contains('%'), "{table}");

    ok(&["render", "--input", &held, "--index", "2", "--results", &p(d, "beam4.jsonl"), "--out", &p(d, "r.svg")]);
    assert!(std::fs::read_to_string(d.join("r.svg")).unwrap().contains("<polyline"));

    let report = ok(&["verify", "--problem", "kp", "--triples", "50", "--instances", "5", "--max-decisions", "4"]);
    assert!(!report.is_empty());
}

#[test]
fn failures_exit_with_category_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = bqco(&["solve-exact", "--input", &p(d, "none.jsonl"), "--out", &p(d, "x.jsonl")]);
    assert_eq!(missing.status.code(), Some(3));

    ok(&["generate", "--problem", "tsp", "--n", "30", "--count", "1", "--out", &p(d, "big.jsonl")]);
    let too_big = bqco(&["solve-exact", "--input", &p(d, "big.jsonl"), "--out", &p(d, "x.jsonl")]);
    assert_eq!(too_big.status.code(), Some(5));

    std::fs::write(d.join("junk.jsonl"), "not json\n").unwrap();
    let junk = bqco(&["solve-exact", "--input", &p(d, "junk.jsonl"), "--out", &p(d, "x.jsonl")]);
    assert_eq!(junk.status.code(), Some(4));

    let bad = bqco(&["generate", "--problem", "nope", "--n", "5", "--out", &p(d, "x.jsonl")]);
    assert!(!bad.status.success());
}

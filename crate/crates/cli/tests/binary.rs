mod common;

use std::process::Command;

use common::fixture;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_neuroground"))
}

fn pipeline_args(cmd: &mut Command) -> &mut Command {
    cmd.arg("--trials")
        .arg(fixture("trials.jsonl"))
        .arg("--vocab")
        .arg(fixture("vocab.tsv"))
        .arg("--graph")
        .arg(fixture("graph.tsv"))
        .arg("--store")
        .arg(fixture("store.tsv"))
        .args(["--dim", "16"])
}

#[test]
fn decode_succeeds_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = pipeline_args(bin().arg("decode"))
        .args(["--ablation", "a1", "--seedless", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = std::fs::read_to_string(dir.path().join("outputs.jsonl")).unwrap();
    assert_eq!(rows.lines().count(), 3);
    assert!(rows.contains("a photo of mushroom and yellow"));
}

#[test]
fn exit_code_one_for_configuration() {
    let out = pipeline_args(bin().arg("decode"))
        .args(["--m", "20"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["decode", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = pipeline_args(bin().arg("decode"))
        .args(["--backend", "http"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "http without endpoint");
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn exit_code_two_for_data() {
    let out = bin()
        .args(["ingest-graph", "--graph", "/nonexistent/graph.tsv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .arg("decode")
        .arg("--trials")
        .arg(fixture("trials.jsonl"))
        .arg("--vocab")
        .arg(fixture("vocab.tsv"))
        .arg("--graph")
        .arg(fixture("vocab.tsv"))
        .args(["--dim", "16", "--ablation", "A6"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn exit_code_three_after_retries() {
    let dir = tempfile::tempdir().unwrap();
    let out = pipeline_args(bin().arg("decode"))
        .args([
            "--backend",
            "http",
            "--endpoint",
            "http://127.0.0.1:9/v1/chat/completions",
            "--model",
            "m",
            "--retries",
            "1",
            "--backoff-ms",
            "1",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("outputs.jsonl").exists());
}

#[test]
fn prune_stats_and_evaluate_print_reports() {
    let out = bin()
        .arg("prune-stats")
        .arg("--trials")
        .arg(fixture("trials.jsonl"))
        .arg("--vocab")
        .arg(fixture("vocab.tsv"))
        .arg("--graph")
        .arg(fixture("graph.tsv"))
        .args(["--dim", "16", "--json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["trials"], 3);

    let out = bin()
        .arg("evaluate")
        .arg("--generations")
        .arg(fixture("trials.jsonl"))
        .arg("--references")
        .arg(fixture("trials.jsonl"))
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "trial rows carry no caption field"
    );

    let out = bin()
        .args(["ablate", "--ablation", "A1,A6"])
        .arg("--trials")
        .arg(fixture("trials.jsonl"))
        .arg("--vocab")
        .arg(fixture("vocab.tsv"))
        .arg("--graph")
        .arg(fixture("graph.tsv"))
        .arg("--store")
        .arg(fixture("store.tsv"))
        .args(["--dim", "16"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 3);
}

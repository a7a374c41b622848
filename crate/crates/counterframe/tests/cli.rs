use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_counterframe"))
        .args(args)
        .current_dir(dir)
        .env_remove("COUNTERFRAME_ORACLE_ENDPOINT")
        .env_remove("COUNTERFRAME_REWRITER_ENDPOINT")
        .output()
        .unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let o = bin(args, dir);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn code(args: &[&str], dir: &Path) -> i32 {
    bin(args, dir).status.code().unwrap()
}

/// fixtures → ingest → score → run → report in `dir`; returns the report.
fn pipeline(dir: &Path) -> String {
    ok(&["fixtures", "--out", "fx"], dir);
    ok(&["ingest", "fx/desk_dump.jsonl", "--out", "linked.jsonl"], dir);
    ok(&["score", "linked.jsonl", "--out", "pairs.jsonl", "--skipped", "skipped.jsonl"], dir);
    let summary = ok(&["run", "pairs.jsonl", "--log", "runs.jsonl"], dir);
    assert_eq!(summary.trim(), "processed 50 events (0 already logged): 35 SUCCESS, 15 FAILURE, 0 ERROR");
    ok(&["report", "--runs", "runs.jsonl", "--matrix", "pairs.jsonl"], dir)
}

#[test]
fn desk_pipeline_is_byte_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = pipeline(a.path());
    let rb = pipeline(b.path());
    assert_eq!(ra, rb);
    for f in ["linked.jsonl", "pairs.jsonl", "skipped.jsonl", "runs.jsonl"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    assert!(ra.contains("Participants"));
    assert_eq!(std::fs::read_to_string(a.path().join("skipped.jsonl")).unwrap(), "");

    // resuming a finished log does nothing
    let again = ok(&["run", "pairs.jsonl", "--log", "runs.jsonl"], a.path());
    assert_eq!(again.trim(), "processed 0 events (50 already logged): 0 SUCCESS, 0 FAILURE, 0 ERROR");
}

#[test]
fn dry_run_lists_pending_events() {
    let d = tempfile::tempdir().unwrap();
    ok(&["fixtures", "--out", "fx"], d.path());
    ok(&["score", "fx/desk_dump.jsonl", "--out", "pairs.jsonl"], d.path());
    let out = ok(&["run", "pairs.jsonl", "--log", "runs.jsonl", "--dry-run"], d.path());
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "50 events, 0 filtered out, 0 already logged, 50 to run");
    assert_eq!(lines.next().unwrap(), "desk-000");
    assert_eq!(out.lines().count(), 51);
    assert_eq!(std::fs::read_to_string(d.path().join("runs.jsonl")).unwrap(), "");
}

#[test]
fn report_formats() {
    let d = tempfile::tempdir().unwrap();
    ok(&["fixtures", "--out", "fx"], d.path());
    let plain = ok(&["report", "--runs", "fx/breakdown_runs.jsonl"], d.path());
    assert!(plain.contains("30.19"), "{plain}");
    assert!(plain.contains("77.24"), "{plain}");
    let csv = ok(&["report", "--ablation", "fx/ablation_runs.jsonl", "--format", "delimited"], d.path());
    assert!(csv.contains("24.88"), "{csv}");
    let json = ok(&["report", "--runs", "fx/breakdown_runs.jsonl", "--format", "structured"], d.path());
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    ok(&["report", "--runs", "fx/breakdown_runs.jsonl", "--out", "r/plain.txt"], d.path());
    assert_eq!(std::fs::read_to_string(d.path().join("r/plain.txt")).unwrap(), plain);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert_eq!(code(&["--help"], p), 0);
    assert_eq!(code(&["frobnicate"], p), 2);
    assert_eq!(code(&["report"], p), 2);
    assert_eq!(code(&["run"], p), 2);

    std::fs::write(p.join("bad.toml"), "[thresholds]\ntau = 2.0\n").unwrap();
    assert_eq!(code(&["--config", "bad.toml", "fixtures", "--out", "x"], p), 2);
    std::fs::write(p.join("typo.toml"), "[engine]\nseeed = 1\n").unwrap();
    assert_eq!(code(&["--config", "typo.toml", "fixtures", "--out", "x"], p), 2);

    std::fs::write(
        p.join("orphan.jsonl"),
        r#"{"kind":"comment","id":"c1","post_id":"nobody","text":"hi"}"#,
    )
    .unwrap();
    let o = bin(&["ingest", "orphan.jsonl", "--out", "o.jsonl"], p);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("c1"));
    assert!(!p.join("o.jsonl").exists());

    assert_eq!(code(&["score", "missing.jsonl", "--out", "x.jsonl"], p), 1);
}

#[test]
fn unreachable_rewriter_gives_error_runs_and_exit_one() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(&["fixtures", "--out", "fx"], p);
    ok(&["score", "fx/desk_dump.jsonl", "--out", "pairs.jsonl"], p);
    std::fs::write(
        p.join("remote.toml"),
        "[rewriter]\nkind = \"remote\"\nendpoint = \"http://127.0.0.1:9/v1\"\ntimeout_ms = 200\nmax_retries = 0\n",
    )
    .unwrap();
    let o = bin(&["--config", "remote.toml", "run", "pairs.jsonl", "--log", "runs.jsonl"], p);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("50 ERROR"));
    // --mock overrides the config and the resumed batch reruns nothing
    let again = ok(&["--config", "remote.toml", "--mock", "run", "pairs.jsonl", "--log", "runs.jsonl"], p);
    assert!(again.contains("50 already logged"), "{again}");
}

#[test]
fn ablate_writes_fourteen_rows_per_event() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(&["fixtures", "--out", "fx"], p);
    ok(&["score", "fx/desk_dump.jsonl", "--out", "pairs.jsonl"], p);
    ok(&["ablate", "pairs.jsonl", "--log", "abl.jsonl"], p);
    let text = std::fs::read_to_string(p.join("abl.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 700);
    let report = ok(&["report", "--ablation", "abl.jsonl"], p);
    assert!(report.contains("Modify the tone of official statements"), "{report}");
}

#[test]
fn example_config_loads_and_matches_defaults() {
    let d = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../counterframe.example.toml");
    ok(&["--config", cfg, "fixtures", "--out", "fx"], d.path());
    ok(&["--config", cfg, "score", "fx/desk_dump.jsonl", "--out", "a.jsonl"], d.path());
    ok(&["score", "fx/desk_dump.jsonl", "--out", "b.jsonl"], d.path());
    assert_eq!(
        std::fs::read(d.path().join("a.jsonl")).unwrap(),
        std::fs::read(d.path().join("b.jsonl")).unwrap()
    );
}

use counterframe::batch::{plan_batch, run_batch, BatchMode, BatchOptions};
use counterframe::fixtures::desk_dump;
use counterframe::ingest::{build_event_dataset, IngestOptions};
use counterframe::runlog::{read_log, runs, RunLog};
use counterframe_core::engine::{EngineConfig, TargetSentiment};
use counterframe_core::{
    ClientError, EventSentimentPair, LexiconScorer, MockRewriter, RunStatus, SentimentClass,
    SentimentOracle, SentimentProbs,
};

fn dataset() -> Vec<EventSentimentPair> {
    build_event_dataset(&desk_dump(), &LexiconScorer::default(), &IngestOptions::default())
        .unwrap()
        .pairs
}

fn options(mode: BatchMode, parallelism: usize) -> BatchOptions {
    BatchOptions {
        mode,
        engine: EngineConfig {
            target: TargetSentiment::at_least(SentimentClass::Neutral),
            ..Default::default()
        },
        parallelism,
        ..Default::default()
    }
}

fn full_log(mode: BatchMode, parallelism: usize) -> (tempfile::TempDir, Vec<u8>) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.jsonl");
    let mut log = RunLog::open(&path).unwrap();
    run_batch(
        &dataset(),
        &mut log,
        &MockRewriter::default(),
        &LexiconScorer::default(),
        &options(mode, parallelism),
    )
    .unwrap();
    let bytes = std::fs::read(&path).unwrap();
    (dir, bytes)
}

#[test]
fn sequential_batch_counts_and_order() {
    let (_dir, bytes) = full_log(BatchMode::Sequential, 8);
    let text = String::from_utf8(bytes).unwrap();
    let entries: Vec<_> = text.lines().map(|l| counterframe::runlog::LogEntry::from_line(l).unwrap()).collect();
    let rs = runs(&entries);
    assert_eq!(rs.len(), 50);
    assert_eq!(rs.iter().filter(|r| r.status == RunStatus::Success).count(), 35);
    let ids: Vec<_> = rs.iter().map(|r| r.event_id.clone().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert!(rs.iter().all(|r| r.provenance.started_at_ms.is_none()));
    assert!(rs.iter().all(|r| r.provenance.oracle.starts_with("lexicon")));
}

#[test]
fn worker_count_does_not_change_the_log() {
    assert_eq!(full_log(BatchMode::Sequential, 1).1, full_log(BatchMode::Sequential, 8).1);
    assert_eq!(full_log(BatchMode::Ablation, 1).1, full_log(BatchMode::Ablation, 5).1);
}

fn resume_matches(mode: BatchMode, keep_lines: usize) {
    let (_d, reference) = full_log(mode, 4);
    let text = String::from_utf8(reference.clone()).unwrap();
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let mut partial: String = lines[..keep_lines].concat();
    partial.push_str(&lines[keep_lines][..lines[keep_lines].len() / 3]);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.jsonl");
    std::fs::write(&path, partial).unwrap();
    let mut log = RunLog::open(&path).unwrap();
    let s = run_batch(
        &dataset(),
        &mut log,
        &MockRewriter::default(),
        &LexiconScorer::default(),
        &options(mode, 4),
    )
    .unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), reference);
    assert_eq!(s.entries_written, lines.len() - keep_lines);

    // a complete log has nothing left to do
    let mut log = RunLog::open(&path).unwrap();
    let again = run_batch(
        &dataset(),
        &mut log,
        &MockRewriter::default(),
        &LexiconScorer::default(),
        &options(mode, 4),
    )
    .unwrap();
    assert_eq!(again.entries_written, 0);
    assert_eq!(again.plan.already_logged, 50);
}

#[test]
fn interrupted_sequential_batch_resumes_to_the_same_log() {
    resume_matches(BatchMode::Sequential, 17);
}

#[test]
fn interrupted_ablation_batch_resumes_mid_event() {
    // 14 rows per event: stop inside the fourth event
    resume_matches(BatchMode::Ablation, 14 * 3 + 5);
}

#[test]
fn ablation_rows_per_event() {
    let (_d, bytes) = full_log(BatchMode::Ablation, 8);
    let text = String::from_utf8(bytes).unwrap();
    assert_eq!(text.lines().count(), 50 * 14);
}

#[test]
fn label_filter_and_dry_run_plan() {
    let mut pairs = dataset();
    pairs[3].label = SentimentClass::Positive;
    pairs[4].label = SentimentClass::Neutral;
    let dir = tempfile::tempdir().unwrap();
    let log = RunLog::open(dir.path().join("l.jsonl")).unwrap();
    let plan = plan_batch(&pairs, &log, &options(BatchMode::Sequential, 2)).unwrap();
    assert_eq!((plan.total, plan.filtered_out, plan.pending.len()), (50, 2, 48));
    assert!(!plan.pending.contains(&pairs[3].narrative.id));
    assert!(plan_batch(&[], &log, &options(BatchMode::Sequential, 2)).is_err());
}

/// Fails for any text containing a mock fragment from the Context category.
struct FailsOnContext;

impl SentimentOracle for FailsOnContext {
    fn predict(&self, text: &str) -> Result<SentimentProbs, ClientError> {
        if text.contains("neutral venue") {
            return Err(ClientError::Unavailable {
                attempts: 4,
                reason: "timed out".into(),
            });
        }
        Ok(LexiconScorer::default().predict(text))
    }
}

#[test]
fn client_failures_become_error_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.jsonl");
    let mut log = RunLog::open(&path).unwrap();
    let s = run_batch(&dataset(), &mut log, &MockRewriter::default(), &FailsOnContext, &options(BatchMode::Sequential, 3))
        .unwrap();
    // events that still fail after four steps reach Context and error there
    assert!(s.error > 0);
    assert_eq!(s.success + s.failure + s.error, 50);
    assert_eq!(s.failure, 0);
    let rs = runs(&read_log(&path).unwrap());
    for r in rs.iter().filter(|r| r.status == RunStatus::Error) {
        assert_eq!(r.records.len(), 4);
        assert_eq!(r.error.as_ref().unwrap().code, "upstream_unavailable");
        assert_eq!(r.error.as_ref().unwrap().step, 5);
    }
}

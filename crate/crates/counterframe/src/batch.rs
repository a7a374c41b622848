//! Resumable batch experiments over an event dataset.
//!
//! Events whose label matches the filter (Negative by default) are processed
//! in event-id order on a bounded worker pool; a single writer appends their
//! log lines in that same order, so an interrupted batch can be resumed by
//! rerunning it against the same log.

use std::time::{SystemTime, UNIX_EPOCH};

use counterframe_core::engine::{CounterfactualEngine, EngineConfig, EngineError, Provenance};
use counterframe_core::registry::REGISTRY;
use counterframe_core::{
    EventSentimentPair, ModificationType, Rewriter, RunStatus, SentimentClass, SentimentOracle,
};
use serde::{Deserialize, Serialize};

use crate::pool::ordered_map;
use crate::runlog::{AblationEntry, LogEntry, LogError, RunLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchMode {
    Sequential,
    Ablation,
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub mode: BatchMode,
    pub engine: EngineConfig,
    /// Classes counted as success in ablation mode.
    pub ablation_targets: Vec<SentimentClass>,
    pub modifications: Vec<&'static ModificationType>,
    pub label_filter: SentimentClass,
    pub parallelism: usize,
    /// Wall-clock timestamps make logs non-reproducible; off for mock runs.
    pub record_timestamps: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            mode: BatchMode::Sequential,
            engine: EngineConfig::default(),
            ablation_targets: vec![SentimentClass::Neutral, SentimentClass::Positive],
            modifications: REGISTRY.iter().collect(),
            label_filter: SentimentClass::Negative,
            parallelism: crate::ingest::DEFAULT_PARALLELISM,
            record_timestamps: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub total: usize,
    pub filtered_out: usize,
    pub already_logged: usize,
    /// Event ids still to process, in processing order.
    pub pending: Vec<String>,
}

/// Counts for this invocation only. In ablation mode the outcome counts
/// are per row.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub plan: BatchPlan,
    pub entries_written: usize,
    pub success: usize,
    pub failure: usize,
    pub error: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("the dataset is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("event {event_id}: {source}")]
    Engine {
        event_id: String,
        #[source]
        source: EngineError,
    },
}

fn pending_mods<'a>(log: &RunLog, opts: &'a BatchOptions, event_id: &str) -> Vec<&'a ModificationType> {
    let done = log.ablated(event_id);
    opts.modifications
        .iter()
        .copied()
        .filter(|m| done.is_none_or(|d| !d.contains(m.key)))
        .collect()
}

/// Which events a batch would process, without calling any client.
pub fn plan_batch(
    pairs: &[EventSentimentPair],
    log: &RunLog,
    opts: &BatchOptions,
) -> Result<BatchPlan, BatchError> {
    if pairs.is_empty() {
        return Err(BatchError::EmptyCorpus);
    }
    let mut selected: Vec<&EventSentimentPair> =
        pairs.iter().filter(|p| p.label == opts.label_filter).collect();
    selected.sort_by(|a, b| a.narrative.id.cmp(&b.narrative.id));
    selected.dedup_by(|a, b| a.narrative.id == b.narrative.id);
    let mut plan = BatchPlan {
        total: pairs.len(),
        filtered_out: pairs.len() - selected.len(),
        ..Default::default()
    };
    for p in selected {
        let id = &p.narrative.id;
        let done = match opts.mode {
            BatchMode::Sequential => log.has_run(id),
            BatchMode::Ablation => pending_mods(log, opts, id).is_empty(),
        };
        if done {
            plan.already_logged += 1;
        } else {
            plan.pending.push(id.clone());
        }
    }
    Ok(plan)
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

pub fn run_batch<R, O>(
    pairs: &[EventSentimentPair],
    log: &mut RunLog,
    rewriter: &R,
    oracle: &O,
    opts: &BatchOptions,
) -> Result<BatchSummary, BatchError>
where
    R: Rewriter + Sync + ?Sized,
    O: SentimentOracle + Sync + ?Sized,
{
    let plan = plan_batch(pairs, log, opts)?;
    let work: Vec<(&EventSentimentPair, Vec<&ModificationType>)> = plan
        .pending
        .iter()
        .map(|id| {
            let pair = pairs.iter().find(|p| &p.narrative.id == id).expect("planned from pairs");
            (pair, pending_mods(log, opts, id))
        })
        .collect();
    let engine = CounterfactualEngine::new(rewriter, oracle, opts.engine.clone());
    let provenance = Provenance {
        oracle: oracle.describe(),
        rewriter: rewriter.describe(),
        started_at_ms: None,
        finished_at_ms: None,
    };
    let mut summary = BatchSummary {
        plan: plan.clone(),
        ..Default::default()
    };
    let mut failure: Option<BatchError> = None;
    ordered_map(
        &work,
        opts.parallelism,
        |_, (pair, mods)| -> Result<Vec<LogEntry>, BatchError> {
            let id = pair.narrative.id.clone();
            let text = pair.narrative.text();
            let started = opts.record_timestamps.then(now_ms);
            let engine_err = |source| BatchError::Engine {
                event_id: id.clone(),
                source,
            };
            match opts.mode {
                BatchMode::Sequential => {
                    let mut run = engine.generate(&id, &text, pair.label).map_err(engine_err)?;
                    run.event_id = Some(id.clone());
                    run.provenance.started_at_ms = started;
                    run.provenance.finished_at_ms = opts.record_timestamps.then(now_ms);
                    Ok(vec![LogEntry::Run(run)])
                }
                BatchMode::Ablation => {
                    let rows = engine
                        .ablate(&text, pair.label, mods, &opts.ablation_targets)
                        .map_err(engine_err)?;
                    let finished = opts.record_timestamps.then(now_ms);
                    Ok(rows
                        .into_iter()
                        .map(|mut r| {
                            r.event_id = Some(id.clone());
                            LogEntry::Ablation(AblationEntry {
                                result: r,
                                thresholds: opts.engine.thresholds,
                                provenance: Provenance {
                                    started_at_ms: started,
                                    finished_at_ms: finished,
                                    ..provenance.clone()
                                },
                            })
                        })
                        .collect())
                }
            }
        },
        |_, result| {
            let entries = match result {
                Ok(e) => e,
                Err(e) => {
                    failure = Some(e);
                    return false;
                }
            };
            if let Err(e) = log.append(&entries) {
                failure = Some(e.into());
                return false;
            }
            summary.entries_written += entries.len();
            for e in &entries {
                let outcome = match e {
                    LogEntry::Run(r) => r.status,
                    LogEntry::Ablation(a) if a.result.error.is_some() => RunStatus::Error,
                    LogEntry::Ablation(a) if a.result.success => RunStatus::Success,
                    LogEntry::Ablation(_) => RunStatus::Failure,
                };
                match outcome {
                    RunStatus::Success => summary.success += 1,
                    RunStatus::Failure => summary.failure += 1,
                    RunStatus::Error => summary.error += 1,
                }
            }
            true
        },
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

//! Deterministic fixture generators.
//!
//! - [`breakdown_runs`]: 2,760 sequential runs whose successes per category
//!   are 577 / 547 / 352 / 234 / 201 (Participants, Context, Communication,
//!   Substance, Process), visited in that order, with 849 failures.
//! - [`ablation_entries`]: 2,822 events × 14 modifications with the
//!   published per-modification success counts.
//! - [`CLASSIFICATION_CONFUSION`]: a three-class confusion matrix matching
//!   the published Negative-class precision and recall.
//! - [`desk_dump`]: a 50-event synthetic forum dump where, under the
//!   built-in lexicon and mock table with a Neutral-or-better target,
//!   exactly 35 events reach the target within five steps.

use counterframe_core::engine::{Provenance, RunError};
use counterframe_core::lexicon::DEFAULT_NEGATIVE_TERMS;
use counterframe_core::registry::Category;
use counterframe_core::{
    AblationResult, Actor, ClassThresholds, CounterfactualRun, DiplomacyType, EventNarrative,
    ModificationType, RunStatus, SelectionStrategy, SentimentClass, SentimentProbs, Theme,
    TransformationRecord,
};

use crate::dump::{Comment, Dump};
use crate::runlog::{AblationEntry, LogEntry};

pub const BREAKDOWN_ORDER: [Category; 5] = [
    Category::Participants,
    Category::Context,
    Category::Communication,
    Category::Substance,
    Category::Process,
];

/// Successes attributed to each category of [`BREAKDOWN_ORDER`].
pub const BREAKDOWN_SUCCESSES: [usize; 5] = [577, 547, 352, 234, 201];
pub const BREAKDOWN_ARTICLES: usize = 2760;

pub const ABLATION_EVENTS: usize = 2822;

/// Successful rewrites out of [`ABLATION_EVENTS`] per modification.
pub const ABLATION_SUCCESSES: [(&str, usize); 14] = [
    ("participants.replace_lead_negotiator", 336),
    ("participants.include_stakeholders", 330),
    ("participants.exclude_parties", 174),
    ("process.transparent_format", 206),
    ("process.timing", 269),
    ("process.coercive_measures", 417),
    ("communication.tone", 702),
    ("communication.publicity", 276),
    ("communication.reframe", 587),
    ("substance.concessions", 298),
    ("substance.primary_objective", 610),
    ("substance.agreement_scope", 536),
    ("context.location", 278),
    ("context.symbolic_gestures", 680),
];

/// `confusion[true][predicted]` over Negative, Neutral, Positive.
pub const CLASSIFICATION_CONFUSION: [[usize; 3]; 3] = [[747, 20, 82], [179, 27, 68], [70, 80, 138]];

fn fixture_provenance() -> Provenance {
    Provenance {
        oracle: "fixture".into(),
        rewriter: "fixture".into(),
        started_at_ms: None,
        finished_at_ms: None,
    }
}

fn negative_probs() -> SentimentProbs {
    SentimentProbs::new(0.6, 0.3, 0.1).expect("valid")
}

fn neutral_probs() -> SentimentProbs {
    SentimentProbs::new(0.3, 0.4, 0.3).expect("valid")
}

/// A run that reaches the target at step `success_at` (1-based), or fails
/// after every category when `None`.
fn fixture_run(index: usize, success_at: Option<usize>) -> CounterfactualRun {
    let original = format!("Fixture article {index:04}.");
    let steps = success_at.unwrap_or(BREAKDOWN_ORDER.len());
    let mut text = original.clone();
    let mut records = Vec::with_capacity(steps);
    for step in 1..=steps {
        let category = BREAKDOWN_ORDER[step - 1];
        let m = category.modifications().next().expect("every category has entries");
        let after = format!("{text} [{}]", m.key);
        let hit = success_at == Some(step);
        let probs = if hit { neutral_probs() } else { negative_probs() };
        records.push(TransformationRecord {
            step_index: step,
            category,
            modification: m.key.to_string(),
            text_before: std::mem::replace(&mut text, after.clone()),
            text_after: after,
            predicted_probs: probs,
            predicted_class: if hit { SentimentClass::Neutral } else { SentimentClass::Negative },
            predicted_score: probs.compound(),
            attempts: 1,
        });
    }
    CounterfactualRun {
        run_id: format!("fx-{index:04}"),
        event_id: Some(format!("article-{index:04}")),
        original_text: original,
        original_class: SentimentClass::Negative,
        target_class: SentimentClass::Neutral,
        target_or_better: true,
        category_order: BREAKDOWN_ORDER.to_vec(),
        selection: SelectionStrategy::First,
        seed: 0,
        thresholds: ClassThresholds::default(),
        pre_check: false,
        records,
        status: if success_at.is_some() { RunStatus::Success } else { RunStatus::Failure },
        final_text: text,
        error: None,
        provenance: fixture_provenance(),
    }
}

pub fn breakdown_runs() -> Vec<CounterfactualRun> {
    let mut outcomes: Vec<Option<usize>> = Vec::with_capacity(BREAKDOWN_ARTICLES);
    for (step, &n) in BREAKDOWN_SUCCESSES.iter().enumerate() {
        outcomes.extend(std::iter::repeat_n(Some(step + 1), n));
    }
    outcomes.resize(BREAKDOWN_ARTICLES, None);
    // spread outcomes over article ids; 1,009 is coprime with 2,760
    let mut slots = vec![None; BREAKDOWN_ARTICLES];
    for (i, o) in outcomes.into_iter().enumerate() {
        slots[(i * 1009) % BREAKDOWN_ARTICLES] = Some(o);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, o)| fixture_run(i, o.expect("permutation covers every slot")))
        .collect()
}

pub fn ablation_results() -> Vec<AblationResult> {
    let mut rows = Vec::with_capacity(ABLATION_EVENTS * ABLATION_SUCCESSES.len());
    for e in 0..ABLATION_EVENTS {
        let original = format!("Fixture event {e:04}.");
        for (m_idx, &(key, successes)) in ABLATION_SUCCESSES.iter().enumerate() {
            let m = ModificationType::by_key(key).expect("fixture keys are registered");
            // 7,919 is coprime with 2,822, so exactly `successes` events hit
            let success = (e * 7919 + m_idx * 131) % ABLATION_EVENTS < successes;
            let probs = if success { neutral_probs() } else { negative_probs() };
            rows.push(AblationResult {
                event_id: Some(format!("event-{e:04}")),
                modification: key.to_string(),
                category: m.category,
                original_text: original.clone(),
                modified_text: Some(format!("{original} [{key}]")),
                original_class: SentimentClass::Negative,
                resulting_class: Some(if success { SentimentClass::Neutral } else { SentimentClass::Negative }),
                predicted_score: Some(probs.compound()),
                target_classes: vec![SentimentClass::Neutral, SentimentClass::Positive],
                success,
                error: None::<RunError>,
            });
        }
    }
    rows
}

pub fn breakdown_log() -> Vec<LogEntry> {
    breakdown_runs().into_iter().map(LogEntry::Run).collect()
}

pub fn ablation_log() -> Vec<LogEntry> {
    ablation_results()
        .into_iter()
        .map(|result| {
            LogEntry::Ablation(AblationEntry {
                result,
                thresholds: ClassThresholds::default(),
                provenance: fixture_provenance(),
            })
        })
        .collect()
}

pub const DESK_EVENTS: usize = 50;

/// Number of negative lexicon terms placed in event `i`'s narrative.
///
/// Seven of every ten events get 1..=18 terms, the rest 19..=33. With the
/// mock adding three positive terms per step, five steps lift the smoothed
/// score to `(15 − n) / (18 + n)`, which clears −0.1 exactly when n ≤ 18.
pub fn desk_negative_terms(i: usize) -> usize {
    if i % 10 < 7 {
        let k = (i / 10) * 7 + i % 10;
        1 + k % 18
    } else {
        let k = (i / 10) * 3 + (i % 10 - 7);
        19 + k % 15
    }
}

pub fn desk_dump() -> Dump {
    let mut dump = Dump::default();
    let terms = DEFAULT_NEGATIVE_TERMS;
    for i in 0..DESK_EVENTS {
        let n = desk_negative_terms(i);
        let words: Vec<&str> = (0..n).map(|j| terms[(i * 7 + j) % terms.len()]).collect();
        let id = format!("desk-{i:03}");
        let actors = [Actor::ALL[i % 5], Actor::ALL[(i / 5) % 5]];
        dump.posts.push(EventNarrative {
            id: id.clone(),
            title: format!("Delegations meet in round {}", i + 1),
            body: format!("Coverage noted {}.", words.join(", ")),
            event_type: DiplomacyType::ALL[i % DiplomacyType::ALL.len()],
            actor_tags: actors.into_iter().collect(),
            theme_tags: [Theme::ALL[i % 4]].into_iter().collect(),
        });
        let thread = [
            ("A terrible outcome for everyone.", (i % 5) as i64),
            ("Bad news, again.", 2),
            ("Noted.", 0),
        ];
        for (j, (text, votes)) in thread.into_iter().enumerate() {
            dump.comments.push(Comment {
                id: format!("{id}-c{j}"),
                post_id: id.clone(),
                text: text.to_string(),
                vote_score: votes,
            });
        }
    }
    dump
}

//! Iterative counterfactual generation.
//!
//! Categories are visited in order. At each step one modification from the
//! current category is applied to the *current* text (so earlier edits carry
//! forward), the result is scored by the oracle, and a
//! [`TransformationRecord`] is appended. The run stops with
//! [`RunStatus::Success`] as soon as the predicted class satisfies the
//! target, and with [`RunStatus::Failure`] once every category has been
//! tried. Client errors abort the run with [`RunStatus::Error`], keeping the
//! records produced so far.
//!
//! Ablation applies each modification independently to the original text.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::client::{ClientError, Rewriter, SentimentOracle};
use crate::registry::{Category, ModificationType};
use crate::sentiment::{compound_score, ClassThresholds, SentimentClass, SentimentProbs};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("source text is empty")]
    EmptyText,
}

/// Class the rewritten text should reach. With `or_better`, any class at or
/// above `class` counts (Negative < Neutral < Positive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSentiment {
    pub class: SentimentClass,
    #[serde(default)]
    pub or_better: bool,
}

impl TargetSentiment {
    pub fn exactly(class: SentimentClass) -> Self {
        Self {
            class,
            or_better: false,
        }
    }

    pub fn at_least(class: SentimentClass) -> Self {
        Self {
            class,
            or_better: true,
        }
    }

    pub fn matches(&self, class: SentimentClass) -> bool {
        if self.or_better {
            class >= self.class
        } else {
            class == self.class
        }
    }

    /// The accepted classes, in ascending order.
    pub fn classes(&self) -> Vec<SentimentClass> {
        SentimentClass::ALL
            .into_iter()
            .filter(|c| self.matches(*c))
            .collect()
    }
}

/// Which modification type to use inside a category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionStrategy {
    /// First entry of the category in registry order.
    #[default]
    First,
    /// Uniform pick driven by the configured seed.
    Random,
    /// Try the category's entries in order and keep the first whose predicted
    /// class differs from the current one. Costs extra client calls.
    Exhaustive,
}

impl SelectionStrategy {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "first" | "first-in-registry" => Some(Self::First),
            "random" | "seeded-random" => Some(Self::Random),
            "exhaustive" => Some(Self::Exhaustive),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub target: TargetSentiment,
    pub category_order: Vec<Category>,
    pub thresholds: ClassThresholds,
    pub selection: SelectionStrategy,
    pub seed: u64,
    /// Skip rewriting when the original class already satisfies the target.
    pub pre_check: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            target: TargetSentiment::exactly(SentimentClass::Neutral),
            category_order: Category::ALL.to_vec(),
            thresholds: ClassThresholds::default(),
            selection: SelectionStrategy::First,
            seed: 0,
            pre_check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformationRecord {
    /// 1-based.
    pub step_index: usize,
    pub category: Category,
    pub modification: String,
    pub text_before: String,
    pub text_after: String,
    pub predicted_probs: SentimentProbs,
    pub predicted_class: SentimentClass,
    pub predicted_score: f64,
    /// Rewrite/predict pairs spent on this step (above 1 only with
    /// exhaustive selection).
    pub attempts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RunStatus {
    Success,
    Failure,
    Error,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Success => "SUCCESS",
            RunStatus::Failure => "FAILURE",
            RunStatus::Error => "ERROR",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [RunStatus::Success, RunStatus::Failure, RunStatus::Error]
            .into_iter()
            .find(|x| x.as_str().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A client failure attached to an aborted run or ablation row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunError {
    /// 1-based step at which the failure happened.
    pub step: usize,
    pub code: String,
    pub message: String,
}

impl RunError {
    fn from_client(step: usize, err: &ClientError) -> Self {
        Self {
            step,
            code: err.code().to_string(),
            message: err.to_string(),
        }
    }
}

/// Client identifiers and timing; timestamps are filled in by the caller.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub oracle: String,
    pub rewriter: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualRun {
    pub run_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_id: Option<String>,
    pub original_text: String,
    pub original_class: SentimentClass,
    pub target_class: SentimentClass,
    pub target_or_better: bool,
    pub category_order: Vec<Category>,
    pub selection: SelectionStrategy,
    pub seed: u64,
    pub thresholds: ClassThresholds,
    pub pre_check: bool,
    pub records: Vec<TransformationRecord>,
    pub status: RunStatus,
    pub final_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RunError>,
    pub provenance: Provenance,
}

impl CounterfactualRun {
    pub fn target(&self) -> TargetSentiment {
        TargetSentiment {
            class: self.target_class,
            or_better: self.target_or_better,
        }
    }

    /// Category of the step that reached the target.
    pub fn achieving_category(&self) -> Option<Category> {
        match self.status {
            RunStatus::Success => self.records.last().map(|r| r.category),
            _ => None,
        }
    }

    /// Checks the structural invariants of a run.
    pub fn validate(&self) -> Result<(), String> {
        if self.records.len() > self.category_order.len() {
            return Err(format!(
                "{} records exceed {} categories",
                self.records.len(),
                self.category_order.len()
            ));
        }
        if let Some(first) = self.records.first() {
            if first.text_before != self.original_text {
                return Err("first record does not start from the original text".into());
            }
        }
        for (i, pair) in self.records.windows(2).enumerate() {
            if pair[0].text_after != pair[1].text_before {
                return Err(format!("chain broken between steps {} and {}", i + 1, i + 2));
            }
        }
        for (i, r) in self.records.iter().enumerate() {
            if r.step_index != i + 1 {
                return Err(format!("record {} has step_index {}", i + 1, r.step_index));
            }
            if r.category != self.category_order[i] {
                return Err(format!("record {} category differs from the recorded order", i + 1));
            }
        }
        let expected_final = self
            .records
            .last()
            .map(|r| r.text_after.as_str())
            .unwrap_or(&self.original_text);
        if self.final_text != expected_final {
            return Err("final_text differs from the last record's output".into());
        }
        let target = self.target();
        let reached = self.records.last().map(|r| target.matches(r.predicted_class));
        match (self.status, reached) {
            (RunStatus::Success, Some(true)) => {}
            (RunStatus::Success, None) if self.pre_check && target.matches(self.original_class) => {}
            (RunStatus::Success, _) => return Err("SUCCESS run did not reach the target".into()),
            (RunStatus::Failure, Some(true)) => {
                return Err("FAILURE run ends on a record matching the target".into())
            }
            (RunStatus::Failure, _) => {
                if self.records.len() != self.category_order.len() {
                    return Err("FAILURE run stopped before exhausting its categories".into());
                }
            }
            (RunStatus::Error, _) => {
                if self.error.is_none() {
                    return Err("ERROR run carries no error".into());
                }
            }
        }
        if self.status != RunStatus::Error {
            // the loop must stop at the first success
            let early = self.records.iter().rev().skip(1).any(|r| target.matches(r.predicted_class));
            if early {
                return Err("a record before the last already matched the target".into());
            }
        }
        Ok(())
    }
}

/// Result of applying one modification to the original text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AblationRecord")]
pub struct AblationResult {
    pub event_id: Option<String>,
    pub modification: String,
    pub category: Category,
    pub original_text: String,
    pub modified_text: Option<String>,
    pub original_class: SentimentClass,
    pub resulting_class: Option<SentimentClass>,
    pub predicted_score: Option<f64>,
    pub target_classes: Vec<SentimentClass>,
    pub success: bool,
    pub error: Option<RunError>,
}

#[derive(Deserialize)]
struct AblationRecord {
    #[serde(default)]
    event_id: Option<String>,
    modification: String,
    category: Category,
    original_text: String,
    #[serde(default)]
    modified_text: Option<String>,
    original_class: SentimentClass,
    #[serde(default)]
    resulting_class: Option<SentimentClass>,
    #[serde(default)]
    predicted_score: Option<f64>,
    target_classes: Vec<SentimentClass>,
    success: bool,
    #[serde(default)]
    error: Option<RunError>,
}

impl TryFrom<AblationRecord> for AblationResult {
    type Error = String;

    fn try_from(r: AblationRecord) -> Result<Self, String> {
        let derived = r
            .resulting_class
            .is_some_and(|c| r.target_classes.contains(&c));
        if derived != r.success {
            return Err(format!(
                "ablation row `{}` stores success={} but its resulting class implies {}",
                r.modification, r.success, derived
            ));
        }
        Ok(AblationResult {
            event_id: r.event_id,
            modification: r.modification,
            category: r.category,
            original_text: r.original_text,
            modified_text: r.modified_text,
            original_class: r.original_class,
            resulting_class: r.resulting_class,
            predicted_score: r.predicted_score,
            target_classes: r.target_classes,
            success: r.success,
            error: r.error,
        })
    }
}

/// Binds a rewriter and an oracle to an [`EngineConfig`].
pub struct CounterfactualEngine<'a, R: ?Sized, O: ?Sized> {
    rewriter: &'a R,
    oracle: &'a O,
    config: EngineConfig,
}

struct Scored {
    text: String,
    probs: SentimentProbs,
    score: f64,
    class: SentimentClass,
}

impl<'a, R, O> CounterfactualEngine<'a, R, O>
where
    R: Rewriter + ?Sized,
    O: SentimentOracle + ?Sized,
{
    pub fn new(rewriter: &'a R, oracle: &'a O, config: EngineConfig) -> Self {
        Self {
            rewriter,
            oracle,
            config,
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn generate(
        &self,
        run_id: &str,
        text: &str,
        original_class: SentimentClass,
    ) -> Result<CounterfactualRun, EngineError> {
        self.generate_with(run_id, text, original_class, &mut |_| {})
    }

    /// Like [`generate`](Self::generate), calling `on_step` with each record
    /// as soon as it is produced.
    pub fn generate_with(
        &self,
        run_id: &str,
        text: &str,
        original_class: SentimentClass,
        on_step: &mut dyn FnMut(&TransformationRecord),
    ) -> Result<CounterfactualRun, EngineError> {
        if text.trim().is_empty() {
            return Err(EngineError::EmptyText);
        }
        let cfg = &self.config;
        let mut run = CounterfactualRun {
            run_id: run_id.to_string(),
            event_id: None,
            original_text: text.to_string(),
            original_class,
            target_class: cfg.target.class,
            target_or_better: cfg.target.or_better,
            category_order: cfg.category_order.clone(),
            selection: cfg.selection,
            seed: cfg.seed,
            thresholds: cfg.thresholds,
            pre_check: cfg.pre_check,
            records: Vec::new(),
            status: RunStatus::Failure,
            final_text: text.to_string(),
            error: None,
            provenance: Provenance {
                oracle: self.oracle.describe(),
                rewriter: self.rewriter.describe(),
                ..Provenance::default()
            },
        };
        if cfg.pre_check && cfg.target.matches(original_class) {
            run.status = RunStatus::Success;
            return Ok(run);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut current = text.to_string();
        let mut current_class = original_class;
        for (i, &category) in cfg.category_order.iter().enumerate() {
            let step = i + 1;
            let candidates = self.candidates(category, &mut rng);
            let mut kept: Option<(&ModificationType, Scored)> = None;
            let mut attempts = 0u32;
            for m in candidates {
                attempts += 1;
                let scored = match self.apply(&current, m) {
                    Ok(s) => s,
                    Err(err) => {
                        run.status = RunStatus::Error;
                        run.error = Some(RunError::from_client(step, &err));
                        return Ok(run);
                    }
                };
                let changed = scored.class != current_class;
                if changed || kept.is_none() {
                    kept = Some((m, scored));
                }
                if changed || cfg.selection != SelectionStrategy::Exhaustive {
                    break;
                }
            }
            let (m, scored) = kept.expect("every category has at least one modification");
            let record = TransformationRecord {
                step_index: step,
                category,
                modification: m.key.to_string(),
                text_before: current.clone(),
                text_after: scored.text.clone(),
                predicted_probs: scored.probs,
                predicted_class: scored.class,
                predicted_score: scored.score,
                attempts,
            };
            on_step(&record);
            run.records.push(record);
            run.final_text = scored.text.clone();
            if cfg.target.matches(scored.class) {
                run.status = RunStatus::Success;
                return Ok(run);
            }
            current = scored.text;
            current_class = scored.class;
        }
        run.status = RunStatus::Failure;
        Ok(run)
    }

    fn candidates(&self, category: Category, rng: &mut ChaCha8Rng) -> Vec<&'static ModificationType> {
        let all: Vec<&'static ModificationType> = category.modifications().collect();
        match self.config.selection {
            SelectionStrategy::First => all.into_iter().take(1).collect(),
            SelectionStrategy::Random => {
                if all.is_empty() {
                    return all;
                }
                let idx = (rng.next_u64() % all.len() as u64) as usize;
                vec![all[idx]]
            }
            SelectionStrategy::Exhaustive => all,
        }
    }

    fn apply(&self, text: &str, m: &ModificationType) -> Result<Scored, ClientError> {
        let out = self.rewriter.rewrite(text, m)?;
        if out.trim().is_empty() {
            return Err(ClientError::RewriteEmpty);
        }
        let probs = self.oracle.predict(&out)?;
        let score =
            compound_score(&probs).map_err(|e| ClientError::Protocol(e.to_string()))?;
        let class = self
            .config
            .thresholds
            .classify(score)
            .map_err(|e| ClientError::Protocol(e.to_string()))?;
        Ok(Scored {
            text: out,
            probs,
            score,
            class,
        })
    }

    /// Applies each modification to the original text independently.
    ///
    /// Client failures are recorded on the affected row; the remaining rows
    /// still run.
    pub fn ablate(
        &self,
        text: &str,
        original_class: SentimentClass,
        modifications: &[&ModificationType],
        targets: &[SentimentClass],
    ) -> Result<Vec<AblationResult>, EngineError> {
        if text.trim().is_empty() {
            return Err(EngineError::EmptyText);
        }
        let mut target_classes = targets.to_vec();
        target_classes.sort();
        target_classes.dedup();
        Ok(modifications
            .iter()
            .map(|m| {
                let mut row = AblationResult {
                    event_id: None,
                    modification: m.key.to_string(),
                    category: m.category,
                    original_text: text.to_string(),
                    modified_text: None,
                    original_class,
                    resulting_class: None,
                    predicted_score: None,
                    target_classes: target_classes.clone(),
                    success: false,
                    error: None,
                };
                match self.apply(text, m) {
                    Ok(s) => {
                        row.success = target_classes.contains(&s.class);
                        row.modified_text = Some(s.text);
                        row.resulting_class = Some(s.class);
                        row.predicted_score = Some(s.score);
                    }
                    Err(err) => row.error = Some(RunError::from_client(1, &err)),
                }
                row
            })
            .collect())
    }
}

/// One-shot form of [`CounterfactualEngine::generate`].
pub fn generate_counterfactual<R, O>(
    text: &str,
    original_class: SentimentClass,
    config: &EngineConfig,
    rewriter: &R,
    oracle: &O,
) -> Result<CounterfactualRun, EngineError>
where
    R: Rewriter + ?Sized,
    O: SentimentOracle + ?Sized,
{
    CounterfactualEngine::new(rewriter, oracle, config.clone()).generate("run", text, original_class)
}

/// One-shot form of [`CounterfactualEngine::ablate`].
pub fn run_ablation<R, O>(
    text: &str,
    original_class: SentimentClass,
    modifications: &[&ModificationType],
    targets: &[SentimentClass],
    thresholds: ClassThresholds,
    rewriter: &R,
    oracle: &O,
) -> Result<Vec<AblationResult>, EngineError>
where
    R: Rewriter + ?Sized,
    O: SentimentOracle + ?Sized,
{
    let config = EngineConfig {
        thresholds,
        ..EngineConfig::default()
    };
    CounterfactualEngine::new(rewriter, oracle, config).ablate(text, original_class, modifications, targets)
}

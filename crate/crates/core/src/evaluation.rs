//! Success-rate analytics over counterfactual run logs and ablation
//! results, plus a format-neutral table model for reports.
//!
//! Percentages are held at full precision; rounding to two decimals only
//! happens when a [`ReportTable`] is rendered.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::GroupSentimentMatrix;
use crate::engine::{AblationResult, CounterfactualRun, RunStatus};
use crate::registry::{Category, ModificationType, REGISTRY};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvaluationError {
    #[error("nothing to evaluate")]
    Empty,
    #[error("{count} run(s) ended in ERROR: {}", ids.join(", "))]
    ErrorRuns { count: usize, ids: Vec<String> },
    #[error("{count} ablation row(s) carry client errors: {}", keys.join(", "))]
    ErrorRows { count: usize, keys: Vec<String> },
}

fn check_runs(runs: &[CounterfactualRun]) -> Result<(), EvaluationError> {
    if runs.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let ids: Vec<String> = runs
        .iter()
        .filter(|r| r.status == RunStatus::Error)
        .map(|r| r.run_id.clone())
        .collect();
    if ids.is_empty() {
        Ok(())
    } else {
        Err(EvaluationError::ErrorRuns {
            count: ids.len(),
            ids,
        })
    }
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryBreakdown {
    pub category: Category,
    pub count: usize,
    pub pct_of_successes: f64,
    pub pct_of_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessBreakdown {
    /// Sorted by count, descending; ties in canonical category order.
    pub rows: Vec<CategoryBreakdown>,
    pub total_successes: usize,
    pub total_articles: usize,
    /// Fraction in `[0, 1]`.
    pub overall_success_rate: f64,
}

impl SuccessBreakdown {
    pub fn row(&self, category: Category) -> &CategoryBreakdown {
        self.rows
            .iter()
            .find(|r| r.category == category)
            .expect("every category has a row")
    }
}

/// Attributes each SUCCESS run to the category of its last record.
pub fn success_breakdown(runs: &[CounterfactualRun]) -> Result<SuccessBreakdown, EvaluationError> {
    check_runs(runs)?;
    let mut counts = [0usize; 5];
    for cat in runs.iter().filter_map(CounterfactualRun::achieving_category) {
        counts[cat as usize] += 1;
    }
    let total_successes: usize = counts.iter().sum();
    let total_articles = runs.len();
    let mut rows: Vec<CategoryBreakdown> = Category::ALL
        .iter()
        .map(|&category| {
            let count = counts[category as usize];
            CategoryBreakdown {
                category,
                count,
                pct_of_successes: pct(count, total_successes),
                pct_of_total: pct(count, total_articles),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then(a.category.cmp(&b.category)));
    Ok(SuccessBreakdown {
        rows,
        total_successes,
        total_articles,
        overall_success_rate: total_successes as f64 / total_articles as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepShare {
    pub step: usize,
    pub successes_at_step: usize,
    pub cumulative_successes: usize,
    /// Fraction of all successes reached within `step` steps.
    pub share: f64,
}

/// Share of successes reached within `k` steps, for `k = 0..=max steps`.
pub fn cumulative_success_by_step(
    runs: &[CounterfactualRun],
) -> Result<Vec<StepShare>, EvaluationError> {
    check_runs(runs)?;
    let max_steps = runs
        .iter()
        .map(|r| r.category_order.len().max(r.records.len()))
        .max()
        .unwrap_or(0);
    let mut at_step = alloc::vec![0usize; max_steps + 1];
    for run in runs.iter().filter(|r| r.status == RunStatus::Success) {
        at_step[run.records.len()] += 1;
    }
    let total: usize = at_step.iter().sum();
    let mut cumulative = 0;
    Ok(at_step
        .iter()
        .enumerate()
        .map(|(step, &n)| {
            cumulative += n;
            StepShare {
                step,
                successes_at_step: n,
                cumulative_successes: cumulative,
                share: if total == 0 {
                    0.0
                } else {
                    cumulative as f64 / total as f64
                },
            }
        })
        .collect())
}

/// Fraction of runs that ended in FAILURE.
pub fn failure_share(runs: &[CounterfactualRun]) -> Result<f64, EvaluationError> {
    check_runs(runs)?;
    let failures = runs.iter().filter(|r| r.status == RunStatus::Failure).count();
    Ok(failures as f64 / runs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub category: Category,
    pub modification: String,
    pub label: String,
    pub total_cases: usize,
    pub successful: usize,
    /// Fraction in `[0, 1]`.
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRate {
    pub category: Category,
    pub total_cases: usize,
    pub successful: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRateTable {
    /// Registry order; keys outside the registry follow, sorted.
    pub rows: Vec<RateRow>,
    /// Canonical category order; categories without rows are omitted.
    pub categories: Vec<CategoryRate>,
}

impl AblationRateTable {
    pub fn row(&self, key: &str) -> Option<&RateRow> {
        self.rows.iter().find(|r| r.modification == key)
    }

    pub fn category(&self, category: Category) -> Option<&CategoryRate> {
        self.categories.iter().find(|c| c.category == category)
    }
}

pub fn ablation_rates(results: &[AblationResult]) -> Result<AblationRateTable, EvaluationError> {
    if results.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let keys: Vec<String> = results
        .iter()
        .filter(|r| r.error.is_some())
        .map(|r| r.modification.clone())
        .collect();
    if !keys.is_empty() {
        return Err(EvaluationError::ErrorRows {
            count: keys.len(),
            keys,
        });
    }
    let mut tally: alloc::collections::BTreeMap<(usize, String), (Category, usize, usize)> =
        alloc::collections::BTreeMap::new();
    for r in results {
        let order = REGISTRY
            .iter()
            .position(|m| m.key == r.modification)
            .unwrap_or(REGISTRY.len());
        let entry = tally
            .entry((order, r.modification.clone()))
            .or_insert((r.category, 0, 0));
        entry.1 += 1;
        entry.2 += r.success as usize;
    }
    let rows: Vec<RateRow> = tally
        .into_iter()
        .map(|((_, key), (category, total, ok))| RateRow {
            category,
            label: ModificationType::by_key(&key)
                .map(|m| m.label.to_string())
                .unwrap_or_else(|| key.clone()),
            modification: key,
            total_cases: total,
            successful: ok,
            success_rate: ok as f64 / total as f64,
        })
        .collect();
    let categories = Category::ALL
        .iter()
        .filter_map(|&category| {
            let (total, ok) = rows
                .iter()
                .filter(|r| r.category == category)
                .fold((0, 0), |(t, s), r| (t + r.total_cases, s + r.successful));
            (total > 0).then(|| CategoryRate {
                category,
                total_cases: total,
                successful: ok,
                success_rate: ok as f64 / total as f64,
            })
        })
        .collect();
    Ok(AblationRateTable { rows, categories })
}

/// A report cell. Percentages are stored unrounded, as percent values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Text(String),
    Count(u64),
    Percent(f64),
    Number(f64),
    Empty,
}

impl Cell {
    /// Display form: percentages and numbers with two decimals, empty cells
    /// as an empty string.
    pub fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Count(n) => n.to_string(),
            Cell::Percent(p) => format!("{p:.2}"),
            Cell::Number(x) => format!("{x:.2}"),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ReportTable {
    pub fn new(title: &str, columns: &[&str]) -> Self {
        Self {
            title: title.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

impl From<&SuccessBreakdown> for ReportTable {
    fn from(b: &SuccessBreakdown) -> Self {
        let mut t = ReportTable::new(
            "Success Breakdown by Category",
            &["Category", "Count", "% of Successes", "% of Total"],
        );
        for r in &b.rows {
            t.rows.push(alloc::vec![
                Cell::Text(r.category.label().into()),
                Cell::Count(r.count as u64),
                Cell::Percent(r.pct_of_successes),
                Cell::Percent(r.pct_of_total),
            ]);
        }
        t.rows.push(alloc::vec![
            Cell::Text("Total Successes".into()),
            Cell::Count(b.total_successes as u64),
            Cell::Percent(if b.total_successes == 0 { 0.0 } else { 100.0 }),
            Cell::Percent(100.0 * b.overall_success_rate),
        ]);
        t
    }
}

/// Cumulative share table; the step-0 row is omitted.
pub fn cumulative_table(shares: &[StepShare]) -> ReportTable {
    let mut t = ReportTable::new(
        "Cumulative Successes by Step",
        &["Step", "Successes", "Cumulative", "% of Successes"],
    );
    for s in shares.iter().filter(|s| s.step > 0) {
        t.rows.push(alloc::vec![
            Cell::Count(s.step as u64),
            Cell::Count(s.successes_at_step as u64),
            Cell::Count(s.cumulative_successes as u64),
            Cell::Percent(100.0 * s.share),
        ]);
    }
    t
}

pub fn failure_table(runs: &[CounterfactualRun]) -> Result<ReportTable, EvaluationError> {
    let share = failure_share(runs)?;
    let failures = runs.iter().filter(|r| r.status == RunStatus::Failure).count();
    let mut t = ReportTable::new("Unchanged Articles", &["Articles", "Unchanged", "% Unchanged"]);
    t.rows.push(alloc::vec![
        Cell::Count(runs.len() as u64),
        Cell::Count(failures as u64),
        Cell::Percent(100.0 * share),
    ]);
    Ok(t)
}

impl AblationRateTable {
    pub fn category_table(&self) -> ReportTable {
        let mut t = ReportTable::new(
            "Success Rate Analysis for Negative to Neutral/Positive Changes",
            &["Category", "Total Cases", "Successful", "Success Rate"],
        );
        for c in &self.categories {
            t.rows.push(alloc::vec![
                Cell::Text(c.category.label().into()),
                Cell::Count(c.total_cases as u64),
                Cell::Count(c.successful as u64),
                Cell::Percent(100.0 * c.success_rate),
            ]);
        }
        t
    }

    pub fn detail_table(&self) -> ReportTable {
        let mut t = ReportTable::new(
            "Detailed Success Rate Analysis by Specific Modification Type",
            &["Category", "Modification Type", "Total", "Successful", "Success Rate"],
        );
        for r in &self.rows {
            t.rows.push(alloc::vec![
                Cell::Text(r.category.label().into()),
                Cell::Text(r.label.clone()),
                Cell::Count(r.total_cases as u64),
                Cell::Count(r.successful as u64),
                Cell::Percent(100.0 * r.success_rate),
            ]);
        }
        t
    }
}

impl From<&GroupSentimentMatrix> for ReportTable {
    fn from(m: &GroupSentimentMatrix) -> Self {
        let mut columns: Vec<String> = alloc::vec![match m.axis {
            crate::corpus::GroupAxis::Actor => "Actor".into(),
            crate::corpus::GroupAxis::Theme => "Theme".into(),
        }];
        columns.extend(m.cols.iter().map(|c| c.as_str().to_string()));
        let rows = m
            .rows
            .iter()
            .zip(&m.cells)
            .map(|(label, cells)| {
                let mut row = alloc::vec![Cell::Text(label.clone())];
                row.extend(cells.iter().map(|c| match c {
                    Some(x) => Cell::Number(*x),
                    None => Cell::Empty,
                }));
                row
            })
            .collect();
        ReportTable {
            title: "Group Sentiment Matrix".into(),
            columns,
            rows,
        }
    }
}

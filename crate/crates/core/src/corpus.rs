//! Event narratives, the diplomacy taxonomy, event–sentiment pairs and the
//! group × diplomacy-type sentiment matrix.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::sentiment::{
    aggregate_post_sentiment, ClassThresholds, ScoredComment, SentimentClass, SentimentError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiplomacyType {
    Bilateral,
    Multilateral,
    Summit,
    Digital,
    Science,
    Economic,
    Cultural,
    Humanitarian,
    Nuclear,
    Migration,
}

impl DiplomacyType {
    pub const ALL: [DiplomacyType; 10] = [
        DiplomacyType::Bilateral,
        DiplomacyType::Multilateral,
        DiplomacyType::Summit,
        DiplomacyType::Digital,
        DiplomacyType::Science,
        DiplomacyType::Economic,
        DiplomacyType::Cultural,
        DiplomacyType::Humanitarian,
        DiplomacyType::Nuclear,
        DiplomacyType::Migration,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DiplomacyType::Bilateral => "Bilateral",
            DiplomacyType::Multilateral => "Multilateral",
            DiplomacyType::Summit => "Summit",
            DiplomacyType::Digital => "Digital",
            DiplomacyType::Science => "Science",
            DiplomacyType::Economic => "Economic",
            DiplomacyType::Cultural => "Cultural",
            DiplomacyType::Humanitarian => "Humanitarian",
            DiplomacyType::Nuclear => "Nuclear",
            DiplomacyType::Migration => "Migration",
        }
    }
}

impl fmt::Display for DiplomacyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Actor {
    China,
    India,
    #[serde(rename = "US")]
    Us,
    #[serde(rename = "Non-US")]
    NonUs,
    Europe,
}

impl Actor {
    pub const ALL: [Actor; 5] = [Actor::China, Actor::India, Actor::Us, Actor::NonUs, Actor::Europe];

    pub fn as_str(&self) -> &'static str {
        match self {
            Actor::China => "China",
            Actor::India => "India",
            Actor::Us => "US",
            Actor::NonUs => "Non-US",
            Actor::Europe => "Europe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Theme {
    Economics,
    Politics,
    Healthcare,
    Climate,
}

impl Theme {
    pub const ALL: [Theme; 4] = [Theme::Economics, Theme::Politics, Theme::Healthcare, Theme::Climate];

    pub fn as_str(&self) -> &'static str {
        match self {
            Theme::Economics => "Economics",
            Theme::Politics => "Politics",
            Theme::Healthcare => "Healthcare",
            Theme::Climate => "Climate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventNarrative {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub body: String,
    pub event_type: DiplomacyType,
    #[serde(default)]
    pub actor_tags: BTreeSet<Actor>,
    #[serde(default)]
    pub theme_tags: BTreeSet<Theme>,
}

impl EventNarrative {
    /// Title and body joined by a blank line; just the title when the body
    /// is empty.
    pub fn text(&self) -> String {
        if self.body.trim().is_empty() {
            self.title.clone()
        } else {
            let mut s = String::with_capacity(self.title.len() + self.body.len() + 2);
            s.push_str(&self.title);
            s.push_str("\n\n");
            s.push_str(&self.body);
            s
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSentimentPair {
    pub narrative: EventNarrative,
    pub score: f64,
    pub label: SentimentClass,
    pub n_comments: usize,
}

impl EventSentimentPair {
    /// Aggregates scored comments into the event's score and label.
    pub fn from_comments(
        narrative: EventNarrative,
        comments: &[ScoredComment],
        thresholds: &ClassThresholds,
    ) -> Result<Self, SentimentError> {
        let score = aggregate_post_sentiment(comments)?;
        Ok(Self {
            narrative,
            score,
            label: thresholds.classify(score)?,
            n_comments: comments.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupAxis {
    Actor,
    Theme,
}

impl GroupAxis {
    pub fn labels(&self) -> Vec<&'static str> {
        match self {
            GroupAxis::Actor => Actor::ALL.iter().map(Actor::as_str).collect(),
            GroupAxis::Theme => Theme::ALL.iter().map(Theme::as_str).collect(),
        }
    }

    fn row_indices(&self, narrative: &EventNarrative) -> Vec<usize> {
        match self {
            GroupAxis::Actor => narrative.actor_tags.iter().map(|a| *a as usize).collect(),
            GroupAxis::Theme => narrative.theme_tags.iter().map(|t| *t as usize).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("no event-sentiment pairs to aggregate")]
    NoPairs,
}

/// Unweighted mean event score per (group, diplomacy type); `None` marks an
/// empty bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSentimentMatrix {
    pub axis: GroupAxis,
    pub rows: Vec<String>,
    pub cols: Vec<DiplomacyType>,
    pub cells: Vec<Vec<Option<f64>>>,
    pub counts: Vec<Vec<usize>>,
}

impl GroupSentimentMatrix {
    pub fn cell(&self, row: &str, col: DiplomacyType) -> Option<f64> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.cols.iter().position(|x| *x == col)?;
        self.cells[r][c]
    }
}

pub fn group_sentiment_matrix(
    pairs: &[EventSentimentPair],
    axis: GroupAxis,
) -> Result<GroupSentimentMatrix, CorpusError> {
    if pairs.is_empty() {
        return Err(CorpusError::NoPairs);
    }
    let rows = axis.labels();
    let cols = DiplomacyType::ALL;
    let mut buckets: Vec<Vec<Vec<f64>>> = alloc::vec![alloc::vec![Vec::new(); cols.len()]; rows.len()];
    for pair in pairs {
        let c = pair.narrative.event_type as usize;
        for r in axis.row_indices(&pair.narrative) {
            buckets[r][c].push(pair.score);
        }
    }
    let mut cells = Vec::with_capacity(rows.len());
    let mut counts = Vec::with_capacity(rows.len());
    for row in buckets.iter_mut() {
        let mut cell_row = Vec::with_capacity(cols.len());
        let mut count_row = Vec::with_capacity(cols.len());
        for bucket in row.iter_mut() {
            count_row.push(bucket.len());
            if bucket.is_empty() {
                cell_row.push(None);
            } else {
                // summation order fixed so the result is permutation invariant
                bucket.sort_by(f64::total_cmp);
                let mean = bucket.iter().sum::<f64>() / bucket.len() as f64;
                cell_row.push(Some(mean.clamp(-1.0, 1.0)));
            }
        }
        cells.push(cell_row);
        counts.push(count_row);
    }
    Ok(GroupSentimentMatrix {
        axis,
        rows: rows.into_iter().map(String::from).collect(),
        cols: cols.to_vec(),
        cells,
        counts,
    })
}

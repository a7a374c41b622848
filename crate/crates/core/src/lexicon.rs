//! Deterministic lexicon scorer with Laplace smoothing.
//!
//! Tokens are produced by lowercasing and splitting on runs of
//! non-alphanumeric characters. With `np` positive hits, `nn` negative hits
//! and smoothing `α`:
//!
//! ```text
//! p_pos = (np + α) / (np + nn + 3α)
//! p_neg = (nn + α) / (np + nn + 3α)
//! p_neu =       α  / (np + nn + 3α)
//! ```

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::client::{ClientError, SentimentOracle};
use crate::sentiment::SentimentProbs;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LexiconError {
    #[error("term `{0}` appears in both the positive and the negative list")]
    Overlap(String),
    #[error("smoothing alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
}

pub const DEFAULT_POSITIVE_TERMS: &[&str] = &[
    "achieve", "achieved", "benefit", "breakthrough", "celebrate", "celebrated", "constructive",
    "cooperation", "cordial", "encouraging", "excellent", "fair", "friendly", "fruitful",
    "generous", "good", "goodwill", "great", "harmony", "hope", "hopeful", "improve", "improved",
    "improvement", "optimism", "optimistic", "partnership", "peace", "peaceful", "positive",
    "praise", "praised", "productive", "progress", "reconciliation", "resolved", "respect",
    "stability", "stable", "strong", "success", "successful", "support", "trust", "warm",
    "welcome", "welcomed", "win",
];

pub const DEFAULT_NEGATIVE_TERMS: &[&str] = &[
    "accuse", "accused", "aggressive", "anger", "angry", "attack", "attacked", "awful", "bad",
    "betrayal", "betrayed", "boycott", "chaos", "collapse", "collapsed", "condemn", "condemned",
    "conflict", "corrupt", "crisis", "deadlock", "disaster", "dispute", "distrust", "escalate",
    "escalation", "fail", "failed", "failure", "hate", "hostile", "hostility", "humiliating",
    "protest", "protests", "stalled", "tension", "tensions", "terrible", "threat", "threaten",
    "threats", "violence", "war", "weak", "worse", "worst",
];

/// Lowercased alphanumeric tokens of `text`.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

/// Parses a term list: one token per line, `#` starts a comment.
pub fn parse_term_list(source: &str) -> Vec<String> {
    source
        .lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
        .map(|line| line.to_lowercase())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconScorer {
    positive: BTreeSet<String>,
    negative: BTreeSet<String>,
    alpha: f64,
}

impl Default for LexiconScorer {
    fn default() -> Self {
        Self::new(
            DEFAULT_POSITIVE_TERMS.iter().copied(),
            DEFAULT_NEGATIVE_TERMS.iter().copied(),
            1.0,
        )
        .expect("built-in lexicon is disjoint")
    }
}

impl LexiconScorer {
    pub fn new<P, N>(positive: P, negative: N, alpha: f64) -> Result<Self, LexiconError>
    where
        P: IntoIterator,
        P::Item: AsRef<str>,
        N: IntoIterator,
        N::Item: AsRef<str>,
    {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(LexiconError::InvalidAlpha(alpha));
        }
        let positive: BTreeSet<String> =
            positive.into_iter().map(|t| t.as_ref().to_lowercase()).collect();
        let negative: BTreeSet<String> =
            negative.into_iter().map(|t| t.as_ref().to_lowercase()).collect();
        if let Some(term) = positive.intersection(&negative).next() {
            return Err(LexiconError::Overlap(term.clone()));
        }
        Ok(Self {
            positive,
            negative,
            alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn positive_terms(&self) -> &BTreeSet<String> {
        &self.positive
    }

    pub fn negative_terms(&self) -> &BTreeSet<String> {
        &self.negative
    }

    /// `(positive hits, negative hits)` in `text`.
    pub fn counts(&self, text: &str) -> (usize, usize) {
        tokenize(text).fold((0, 0), |(np, nn), tok| {
            if self.positive.contains(&tok) {
                (np + 1, nn)
            } else if self.negative.contains(&tok) {
                (np, nn + 1)
            } else {
                (np, nn)
            }
        })
    }

    pub fn predict(&self, text: &str) -> SentimentProbs {
        let (np, nn) = self.counts(text);
        self.probs_from_counts(np, nn)
    }

    /// Closed form of the smoothed estimate for given hit counts.
    pub fn probs_from_counts(&self, np: usize, nn: usize) -> SentimentProbs {
        let a = self.alpha;
        let denom = np as f64 + nn as f64 + 3.0 * a;
        let p_pos = (np as f64 + a) / denom;
        let p_neg = (nn as f64 + a) / denom;
        SentimentProbs {
            p_neg,
            p_neu: a / denom,
            p_pos,
        }
    }
}

impl SentimentOracle for LexiconScorer {
    fn predict(&self, text: &str) -> Result<SentimentProbs, ClientError> {
        Ok(LexiconScorer::predict(self, text))
    }

    fn describe(&self) -> String {
        format!(
            "lexicon(alpha={},positive={},negative={})",
            self.alpha,
            self.positive.len(),
            self.negative.len()
        )
    }
}

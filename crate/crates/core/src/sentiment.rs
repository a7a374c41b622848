//! Sentiment arithmetic: compounding scores, vote weights, thread
//! aggregation and class thresholds.

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Maximum deviation of a probability triple's sum from 1.
///
/// Remote inference endpoints round their outputs, so this is looser than
/// the exact-arithmetic invariant.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SentimentError {
    #[error("invalid probability triple ({p_neg}, {p_neu}, {p_pos}): {reason}")]
    InvalidProbs {
        p_neg: f64,
        p_neu: f64,
        p_pos: f64,
        reason: &'static str,
    },
    #[error("comment thread is empty")]
    EmptyThread,
    #[error("total comment weight is zero")]
    ZeroWeight,
    #[error("score {0} lies outside [-1, 1]")]
    ScoreOutOfRange(f64),
    #[error("threshold tau = {0} must lie strictly between 0 and 1")]
    InvalidThreshold(f64),
}

/// Negative / neutral / positive probabilities from a sentiment oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProbs")]
pub struct SentimentProbs {
    pub p_neg: f64,
    pub p_neu: f64,
    pub p_pos: f64,
}

#[derive(Deserialize)]
struct RawProbs {
    p_neg: f64,
    p_neu: f64,
    p_pos: f64,
}

impl TryFrom<RawProbs> for SentimentProbs {
    type Error = SentimentError;

    fn try_from(raw: RawProbs) -> Result<Self, Self::Error> {
        SentimentProbs::new(raw.p_neg, raw.p_neu, raw.p_pos)
    }
}

impl SentimentProbs {
    pub fn new(p_neg: f64, p_neu: f64, p_pos: f64) -> Result<Self, SentimentError> {
        let invalid = |reason| SentimentError::InvalidProbs {
            p_neg,
            p_neu,
            p_pos,
            reason,
        };
        for p in [p_neg, p_neu, p_pos] {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(invalid("component outside [0, 1]"));
            }
        }
        if libm::fabs(p_neg + p_neu + p_pos - 1.0) > PROB_SUM_TOLERANCE {
            return Err(invalid("components do not sum to 1"));
        }
        Ok(Self {
            p_neg,
            p_neu,
            p_pos,
        })
    }

    /// `p_pos - p_neg`, always in `[-1, 1]`.
    pub fn compound(&self) -> f64 {
        self.p_pos - self.p_neg
    }
}

/// Compounding sentiment score of a probability triple.
///
/// Re-validates the triple, so values built by struct literal are checked
/// too.
pub fn compound_score(probs: &SentimentProbs) -> Result<f64, SentimentError> {
    SentimentProbs::new(probs.p_neg, probs.p_neu, probs.p_pos).map(|p| p.compound())
}

/// Three-way sentiment label, ordered `Negative < Neutral < Positive`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentClass {
    Negative,
    Neutral,
    Positive,
}

impl SentimentClass {
    pub const ALL: [SentimentClass; 3] = [
        SentimentClass::Negative,
        SentimentClass::Neutral,
        SentimentClass::Positive,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SentimentClass::Negative => "negative",
            SentimentClass::Neutral => "neutral",
            SentimentClass::Positive => "positive",
        }
    }

    /// Display label as used in report tables.
    pub fn label(&self) -> &'static str {
        match self {
            SentimentClass::Negative => "Negative",
            SentimentClass::Neutral => "Neutral",
            SentimentClass::Positive => "Positive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
    }

    pub(crate) fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for SentimentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Symmetric dead zone `(-tau, +tau)` mapped to `Neutral`; boundaries are
/// inclusive on the polar side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawThresholds")]
pub struct ClassThresholds {
    pub tau: f64,
}

#[derive(Deserialize)]
struct RawThresholds {
    tau: f64,
}

impl TryFrom<RawThresholds> for ClassThresholds {
    type Error = SentimentError;

    fn try_from(raw: RawThresholds) -> Result<Self, Self::Error> {
        ClassThresholds::new(raw.tau)
    }
}

impl Default for ClassThresholds {
    fn default() -> Self {
        Self { tau: 0.1 }
    }
}

impl ClassThresholds {
    pub fn new(tau: f64) -> Result<Self, SentimentError> {
        if tau.is_finite() && tau > 0.0 && tau < 1.0 {
            Ok(Self { tau })
        } else {
            Err(SentimentError::InvalidThreshold(tau))
        }
    }

    pub fn classify(&self, score: f64) -> Result<SentimentClass, SentimentError> {
        classify(score, self)
    }
}

pub fn classify(score: f64, thresholds: &ClassThresholds) -> Result<SentimentClass, SentimentError> {
    if !score.is_finite() || !(-1.0..=1.0).contains(&score) {
        return Err(SentimentError::ScoreOutOfRange(score));
    }
    Ok(if score >= thresholds.tau {
        SentimentClass::Positive
    } else if score <= -thresholds.tau {
        SentimentClass::Negative
    } else {
        SentimentClass::Neutral
    })
}

/// How a comment's vote score turns into an aggregation weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// `1 + ln(1 + max(0, votes))`
    #[default]
    Log,
    /// `max(1, votes)`
    Linear,
    /// Every comment weighs 1.
    Uniform,
}

impl WeightScheme {
    pub fn weight(&self, vote_score: i64) -> f64 {
        match self {
            WeightScheme::Log => comment_weight(vote_score),
            WeightScheme::Linear => vote_score.max(1) as f64,
            WeightScheme::Uniform => 1.0,
        }
    }
}

/// Default vote weight: `1 + ln(1 + max(0, vote_score))`.
pub fn comment_weight(vote_score: i64) -> f64 {
    1.0 + libm::log1p(vote_score.max(0) as f64)
}

/// A comment after the oracle has scored it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredComment {
    pub id: String,
    pub post_id: String,
    pub vote_score: i64,
    pub probs: SentimentProbs,
    pub compound: f64,
    pub weight: f64,
}

impl ScoredComment {
    pub fn new(
        id: impl Into<String>,
        post_id: impl Into<String>,
        vote_score: i64,
        probs: SentimentProbs,
        scheme: WeightScheme,
    ) -> Self {
        Self {
            id: id.into(),
            post_id: post_id.into(),
            vote_score,
            compound: probs.compound(),
            weight: scheme.weight(vote_score),
            probs,
        }
    }
}

/// Weighted mean of comment compounding scores.
pub fn aggregate_post_sentiment(comments: &[ScoredComment]) -> Result<f64, SentimentError> {
    weighted_mean(comments.iter().map(|c| (c.compound, c.weight)))
}

/// `Σ wᵢ·xᵢ / Σ wᵢ` over `(value, weight)` pairs.
///
/// The result is clamped to the range of the inputs so rounding can never
/// push it outside their convex hull.
pub fn weighted_mean(
    items: impl IntoIterator<Item = (f64, f64)>,
) -> Result<f64, SentimentError> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut n = 0usize;
    for (value, weight) in items {
        n += 1;
        num += weight * value;
        den += weight;
        lo = lo.min(value);
        hi = hi.max(value);
    }
    if n == 0 {
        return Err(SentimentError::EmptyThread);
    }
    if den <= 0.0 {
        return Err(SentimentError::ZeroWeight);
    }
    Ok((num / den).clamp(lo, hi))
}

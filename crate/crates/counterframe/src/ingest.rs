//! Scoring comment threads into event–sentiment pairs.

use std::io::{BufRead, Write};

use counterframe_core::sentiment::SentimentError;
use counterframe_core::{
    ClassThresholds, ClientError, EventSentimentPair, ScoredComment, SentimentOracle, WeightScheme,
};
use serde::{Deserialize, Serialize};

use crate::dump::Dump;
use crate::pool::ordered_map;

pub const DEFAULT_PARALLELISM: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPost {
    pub post_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventDataset {
    /// One pair per scored post, in dump order.
    pub pairs: Vec<EventSentimentPair>,
    pub skipped: Vec<SkippedPost>,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("post {post_id}, comment {comment_id}: {source}")]
    Oracle {
        post_id: String,
        comment_id: String,
        #[source]
        source: ClientError,
    },
    #[error("post {post_id}: {source}")]
    Sentiment {
        post_id: String,
        #[source]
        source: SentimentError,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    pub thresholds: ClassThresholds,
    pub weights: WeightScheme,
    pub parallelism: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            thresholds: ClassThresholds::default(),
            weights: WeightScheme::Log,
            parallelism: DEFAULT_PARALLELISM,
        }
    }
}

enum Outcome {
    Pair(EventSentimentPair),
    Skipped(SkippedPost),
}

/// Scores every comment, aggregates each thread and labels the event. Posts
/// without comments (or whose weights sum to zero) are reported as skipped.
/// The first oracle failure, in dump order, aborts the build.
pub fn build_event_dataset<O>(
    dump: &Dump,
    oracle: &O,
    options: &IngestOptions,
) -> Result<EventDataset, IngestError>
where
    O: SentimentOracle + Sync + ?Sized,
{
    let threads = dump.threads();
    let mut out = EventDataset::default();
    let mut failure = None;
    ordered_map(
        &dump.posts,
        options.parallelism,
        |_, post| -> Result<Outcome, IngestError> {
            let thread = threads.get(post.id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            if thread.is_empty() {
                return Ok(Outcome::Skipped(SkippedPost {
                    post_id: post.id.clone(),
                    reason: "no comments".into(),
                }));
            }
            let mut scored = Vec::with_capacity(thread.len());
            for c in thread {
                let probs = oracle.predict(&c.text).map_err(|source| IngestError::Oracle {
                    post_id: post.id.clone(),
                    comment_id: c.id.clone(),
                    source,
                })?;
                scored.push(ScoredComment::new(&c.id, &post.id, c.vote_score, probs, options.weights));
            }
            match EventSentimentPair::from_comments(post.clone(), &scored, &options.thresholds) {
                Ok(pair) => Ok(Outcome::Pair(pair)),
                Err(SentimentError::ZeroWeight) => Ok(Outcome::Skipped(SkippedPost {
                    post_id: post.id.clone(),
                    reason: "comment weights sum to zero".into(),
                })),
                Err(source) => Err(IngestError::Sentiment {
                    post_id: post.id.clone(),
                    source,
                }),
            }
        },
        |_, result| match result {
            Ok(Outcome::Pair(p)) => {
                out.pairs.push(p);
                true
            }
            Ok(Outcome::Skipped(s)) => {
                out.skipped.push(s);
                true
            }
            Err(e) => {
                failure = Some(e);
                false
            }
        },
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

pub fn write_pairs(pairs: &[EventSentimentPair], mut w: impl Write) -> std::io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_skipped(skipped: &[SkippedPost], mut w: impl Write) -> std::io::Result<()> {
    for s in skipped {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub fn read_pairs(reader: impl BufRead) -> Result<Vec<EventSentimentPair>, DatasetError> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        pairs.push(serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(pairs)
}

//! Core of the counterframe toolkit.
//!
//! Everything in this crate is pure computation over in-memory values and
//! builds under `#![no_std]` with `alloc`:
//!
//! - [`sentiment`]: probability triples, compounding scores, vote weights,
//!   weighted thread aggregation and class thresholds.
//! - [`lexicon`]: a deterministic Laplace-smoothed lexicon scorer.
//! - [`metrics`]: per-class precision / recall / F1 reports.
//! - [`corpus`]: event narratives, the diplomacy taxonomy and group matrices.
//! - [`registry`] and [`prompt`]: the 14 modification types and the
//!   two-part rewrite prompt.
//! - [`client`]: the oracle and rewriter traits plus the mock rewriter.
//! - [`engine`]: iterative category-sequential counterfactual generation and
//!   single-modification ablation.
//! - [`evaluation`]: success-rate analytics over run logs.
//!
//! IO, HTTP clients, the run store and the CLI live in the `counterframe`
//! crate.

#![no_std]

extern crate alloc;

pub mod client;
pub mod corpus;
pub mod engine;
pub mod evaluation;
pub mod lexicon;
pub mod metrics;
pub mod prompt;
pub mod registry;
pub mod sentiment;

pub use client::{ClientError, LengthBand, MockRewriter, MockTable, Rewriter, SentimentOracle};
pub use corpus::{
    Actor, DiplomacyType, EventNarrative, EventSentimentPair, GroupAxis, GroupSentimentMatrix,
    Theme,
};
pub use engine::{
    AblationResult, CounterfactualRun, EngineConfig, RunStatus, SelectionStrategy, TargetSentiment,
    TransformationRecord,
};
pub use lexicon::LexiconScorer;
pub use registry::{Category, ModificationType};
pub use sentiment::{
    ClassThresholds, ScoredComment, SentimentClass, SentimentError, SentimentProbs, WeightScheme,
};

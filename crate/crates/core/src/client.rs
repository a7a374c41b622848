//! Oracle and rewriter interfaces, the shared client error taxonomy, the
//! length-similarity band and the deterministic mock rewriter.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::registry::{ModificationType, REGISTRY};
use crate::sentiment::SentimentProbs;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClientError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("request rejected with status {status}: {message}")]
    Rejected { status: u16, message: String },
    #[error("endpoint unavailable after {attempts} attempt(s): {reason}")]
    Unavailable { attempts: u32, reason: String },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error(
        "rewrite has {tokens} tokens, outside the band [{min}, {max}] after {attempts} attempt(s)"
    )]
    RewriteOutOfBand {
        attempts: u32,
        tokens: usize,
        min: usize,
        max: usize,
    },
    #[error("rewriter returned an empty completion")]
    RewriteEmpty,
    #[error("configuration error: {0}")]
    Config(String),
}

impl ClientError {
    /// Machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            ClientError::InvalidInput(_) => "invalid_input",
            ClientError::Rejected { .. } => "upstream_rejected",
            ClientError::Unavailable { .. } => "upstream_unavailable",
            ClientError::Protocol(_) => "upstream_protocol",
            ClientError::RewriteOutOfBand { .. } => "rewrite_out_of_band",
            ClientError::RewriteEmpty => "rewrite_empty",
            ClientError::Config(_) => "configuration",
        }
    }
}

/// Anything that maps text to a sentiment probability triple.
pub trait SentimentOracle {
    fn predict(&self, text: &str) -> Result<SentimentProbs, ClientError>;

    /// Identifier recorded in run provenance. Must never contain secrets.
    fn describe(&self) -> String {
        "oracle".into()
    }
}

/// Anything that applies one modification type to a text.
pub trait Rewriter {
    fn rewrite(&self, text: &str, modification: &ModificationType) -> Result<String, ClientError>;

    fn describe(&self) -> String {
        "rewriter".into()
    }
}

macro_rules! forward_impls {
    ($tr:ident, $method:ident ( $($arg:ident : $ty:ty),* ) -> $ret:ty) => {
        impl<T: $tr + ?Sized> $tr for &T {
            fn $method(&self, $($arg: $ty),*) -> $ret { (**self).$method($($arg),*) }
            fn describe(&self) -> String { (**self).describe() }
        }
        impl<T: $tr + ?Sized> $tr for Box<T> {
            fn $method(&self, $($arg: $ty),*) -> $ret { (**self).$method($($arg),*) }
            fn describe(&self) -> String { (**self).describe() }
        }
        impl<T: $tr + ?Sized> $tr for Arc<T> {
            fn $method(&self, $($arg: $ty),*) -> $ret { (**self).$method($($arg),*) }
            fn describe(&self) -> String { (**self).describe() }
        }
    };
}

forward_impls!(SentimentOracle, predict(text: &str) -> Result<SentimentProbs, ClientError>);
forward_impls!(Rewriter, rewrite(text: &str, modification: &ModificationType) -> Result<String, ClientError>);

/// Whitespace-token count.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Output token count must stay within `±tolerance` of the input's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthBand {
    pub tolerance: f64,
}

impl Default for LengthBand {
    fn default() -> Self {
        Self { tolerance: 0.3 }
    }
}

impl LengthBand {
    pub fn bounds(&self, input_tokens: usize) -> (usize, usize) {
        let n = input_tokens as f64;
        let min = libm::ceil(n * (1.0 - self.tolerance)).max(0.0) as usize;
        let max = libm::floor(n * (1.0 + self.tolerance)) as usize;
        (min, max.max(min))
    }

    /// `Ok(())` when `output` is within the band around `input`, otherwise
    /// `Err((tokens, min, max))`.
    pub fn check(&self, input: &str, output: &str) -> Result<(), (usize, usize, usize)> {
        let (min, max) = self.bounds(token_count(input));
        let tokens = token_count(output);
        if (min..=max).contains(&tokens) {
            Ok(())
        } else {
            Err((tokens, min, max))
        }
    }
}

/// Modification key → fragment alternatives appended by the mock rewriter.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MockTable {
    fragments: BTreeMap<String, Vec<String>>,
}

impl MockTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, alternatives: Vec<String>) {
        self.fragments.insert(key.into(), alternatives);
    }

    pub fn get(&self, key: &str) -> Option<&[String]> {
        self.fragments.get(key).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    /// Parses `key = fragment [| alternative ...]` lines; `#` starts a
    /// comment line.
    pub fn parse(source: &str) -> Result<Self, ClientError> {
        let mut table = Self::new();
        for (idx, raw) in source.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line.split_once('=').ok_or_else(|| {
                ClientError::Config(format!("mock table line {}: expected `key = fragment`", idx + 1))
            })?;
            let alternatives: Vec<String> = rest
                .split('|')
                .map(|f| f.trim().to_string())
                .filter(|f| !f.is_empty())
                .collect();
            if alternatives.is_empty() {
                return Err(ClientError::Config(format!(
                    "mock table line {}: empty fragment",
                    idx + 1
                )));
            }
            table.insert(key.trim(), alternatives);
        }
        Ok(table)
    }

    /// One fragment per registry entry, each carrying exactly three terms of
    /// the built-in positive lexicon and none of the negative one.
    pub fn builtin() -> Self {
        let mut table = Self::new();
        for (key, fragment) in BUILTIN_FRAGMENTS {
            table.insert(*key, alloc::vec![fragment.to_string()]);
        }
        table
    }
}

const BUILTIN_FRAGMENTS: &[(&str, &str)] = &[
    (
        "participants.replace_lead_negotiator",
        "A more dovish envoy now leads the delegation, offering constructive goodwill and trust.",
    ),
    (
        "participants.include_stakeholders",
        "Regional stakeholders joined the table, widening partnership, cooperation and support.",
    ),
    (
        "participants.exclude_parties",
        "With spoilers left outside the room, the smaller format proved productive, stable and fair.",
    ),
    (
        "process.transparent_format",
        "The open format let observers follow every session, which earned respect, trust and praise.",
    ),
    (
        "process.timing",
        "Moving the talks to a calmer season gave time for progress, optimism and harmony.",
    ),
    (
        "process.coercive_measures",
        "Incentives replaced penalties, bringing cooperation and a hopeful, peaceful mood.",
    ),
    (
        "communication.tone",
        "Official statements adopted a warm, friendly and constructive tone.",
    ),
    (
        "communication.publicity",
        "Keeping the sessions private allowed candid, productive exchanges and real progress toward peace.",
    ),
    (
        "communication.reframe",
        "Officials described the issue as a shared opportunity for mutual benefit, stability and partnership.",
    ),
    (
        "substance.concessions",
        "Each side offered generous concessions, a fair exchange widely welcomed.",
    ),
    (
        "substance.primary_objective",
        "The stated objective became long-term reconciliation, stability and cooperation.",
    ),
    (
        "substance.agreement_scope",
        "The proposed agreement grew into a broad partnership promising benefit and improvement.",
    ),
    (
        "context.location",
        "Hosting the meeting at a neutral venue set a cordial, friendly and hopeful atmosphere.",
    ),
    (
        "context.symbolic_gestures",
        "Leaders exchanged gifts and shared a meal, a gesture of goodwill, respect and harmony.",
    ),
];

/// Appends a fragment for the requested modification to the text.
#[derive(Debug, Clone, PartialEq)]
pub struct MockRewriter {
    table: MockTable,
    seed: u64,
    separator: String,
}

impl Default for MockRewriter {
    fn default() -> Self {
        Self::new(MockTable::builtin(), 0)
    }
}

impl MockRewriter {
    pub fn new(table: MockTable, seed: u64) -> Self {
        Self {
            table,
            seed,
            separator: " ".into(),
        }
    }

    pub fn table(&self) -> &MockTable {
        &self.table
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mock_rewrite(
        &self,
        text: &str,
        modification: &ModificationType,
    ) -> Result<String, ClientError> {
        let alternatives = self.table.get(modification.key).ok_or_else(|| {
            ClientError::Config(format!(
                "mock table has no fragment for modification `{}`",
                modification.key
            ))
        })?;
        let fragment = match alternatives {
            [] => return Err(ClientError::Config(format!("empty fragment list for `{}`", modification.key))),
            [only] => only,
            many => {
                let seed = self.seed ^ fnv1a(text.as_bytes()) ^ fnv1a(modification.key.as_bytes()).rotate_left(17);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                &many[(rng.next_u64() % many.len() as u64) as usize]
            }
        };
        let mut out = String::with_capacity(text.len() + fragment.len() + self.separator.len());
        out.push_str(text.trim_end());
        if !out.is_empty() {
            out.push_str(&self.separator);
        }
        out.push_str(fragment);
        Ok(out)
    }

    /// Checks that every registry entry has a fragment.
    pub fn validate_complete(&self) -> Result<(), ClientError> {
        match REGISTRY.iter().find(|m| self.table.get(m.key).is_none()) {
            Some(m) => Err(ClientError::Config(format!(
                "mock table has no fragment for modification `{}`",
                m.key
            ))),
            None => Ok(()),
        }
    }
}

impl Rewriter for MockRewriter {
    fn rewrite(&self, text: &str, modification: &ModificationType) -> Result<String, ClientError> {
        self.mock_rewrite(text, modification)
    }

    fn describe(&self) -> String {
        format!("mock(seed={},entries={})", self.seed, self.table.len())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

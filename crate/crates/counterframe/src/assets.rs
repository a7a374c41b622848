//! Loading lexicon term lists and mock rewrite tables from files.

use std::path::{Path, PathBuf};

use counterframe_core::lexicon::{parse_term_list, LexiconError, DEFAULT_NEGATIVE_TERMS, DEFAULT_POSITIVE_TERMS};
use counterframe_core::{ClientError, LexiconScorer, MockTable};

#[derive(Debug, thiserror::Error)]
pub enum AssetError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("{path}: {source}")]
    Table {
        path: PathBuf,
        #[source]
        source: ClientError,
    },
}

fn read(path: &Path) -> Result<String, AssetError> {
    std::fs::read_to_string(path).map_err(|source| AssetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Builds a lexicon scorer; a missing path falls back to the built-in list.
pub fn load_lexicon(
    positive: Option<&Path>,
    negative: Option<&Path>,
    alpha: f64,
) -> Result<LexiconScorer, AssetError> {
    let pos = match positive {
        Some(p) => parse_term_list(&read(p)?),
        None => DEFAULT_POSITIVE_TERMS.iter().map(|s| s.to_string()).collect(),
    };
    let neg = match negative {
        Some(p) => parse_term_list(&read(p)?),
        None => DEFAULT_NEGATIVE_TERMS.iter().map(|s| s.to_string()).collect(),
    };
    Ok(LexiconScorer::new(pos, neg, alpha)?)
}

pub fn load_mock_table(path: &Path) -> Result<MockTable, AssetError> {
    MockTable::parse(&read(path)?).map_err(|source| AssetError::Table {
        path: path.to_path_buf(),
        source,
    })
}

//! TOML configuration.
//!
//! ```toml
//! [thresholds]
//! tau = 0.1
//!
//! [weights]
//! scheme = "log"          # log | linear | uniform
//!
//! [oracle]
//! kind = "lexicon"        # lexicon | remote
//! endpoint = "https://..."
//!
//! [rewriter]
//! kind = "mock"           # mock | remote
//!
//! [engine]
//! category_order = ["participants", "process", "communication", "substance", "context"]
//!
//! [service]
//! bind = "127.0.0.1:8080"
//! ```
//!
//! Every key has a default. Environment variables `COUNTERFRAME_ORACLE_ENDPOINT`
//! and `COUNTERFRAME_REWRITER_ENDPOINT` override the endpoints; API keys are
//! only ever read from `ORACLE_API_KEY` / `REWRITER_API_KEY`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use counterframe_core::engine::{EngineConfig, TargetSentiment};
use counterframe_core::registry::Category;
use counterframe_core::{
    ClassThresholds, ClientError, MockRewriter, MockTable, Rewriter, SelectionStrategy,
    SentimentClass, SentimentOracle, WeightScheme,
};
use serde::{Deserialize, Serialize};

use crate::assets::{load_lexicon, load_mock_table, AssetError};
use crate::remote::{RemoteOracle, RemoteOracleConfig, RemoteRewriter, RemoteRewriterConfig};

pub type SharedOracle = Arc<dyn SentimentOracle + Send + Sync>;
pub type SharedRewriter = Arc<dyn Rewriter + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Client(#[from] ClientError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    pub tau: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        Self {
            tau: ClassThresholds::default().tau,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightSection {
    pub scheme: WeightScheme,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    #[default]
    Lexicon,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleSection {
    pub kind: OracleKind,
    pub positive_terms: Option<PathBuf>,
    pub negative_terms: Option<PathBuf>,
    pub alpha: f64,
    #[serde(flatten)]
    pub remote: RemoteOracleConfig,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            kind: OracleKind::Lexicon,
            positive_terms: None,
            negative_terms: None,
            alpha: 1.0,
            remote: RemoteOracleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewriterKind {
    #[default]
    Mock,
    Remote,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewriterSection {
    pub kind: RewriterKind,
    pub mock_table: Option<PathBuf>,
    pub mock_seed: u64,
    #[serde(flatten)]
    pub remote: RemoteRewriterConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSection {
    pub category_order: Vec<Category>,
    pub selection: SelectionStrategy,
    pub seed: u64,
    pub pre_check: bool,
    /// Batch target; the service takes the target from each request.
    pub target_class: SentimentClass,
    pub target_or_better: bool,
    /// Classes counted as success by ablation.
    pub ablation_targets: Vec<SentimentClass>,
}

impl Default for EngineSection {
    fn default() -> Self {
        Self {
            category_order: Category::ALL.to_vec(),
            selection: SelectionStrategy::First,
            seed: 0,
            pre_check: false,
            target_class: SentimentClass::Neutral,
            target_or_better: true,
            ablation_targets: vec![SentimentClass::Neutral, SentimentClass::Positive],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchSection {
    pub parallelism: usize,
    pub label_filter: SentimentClass,
}

impl Default for BatchSection {
    fn default() -> Self {
        Self {
            parallelism: crate::ingest::DEFAULT_PARALLELISM,
            label_filter: SentimentClass::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub bind: String,
    pub store: PathBuf,
    /// Maximum concurrently running generation requests.
    pub workers: usize,
}

impl Default for ServiceSection {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            store: PathBuf::from("runs"),
            workers: 8,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub thresholds: ThresholdSection,
    pub weights: WeightSection,
    pub oracle: OracleSection,
    pub rewriter: RewriterSection,
    pub engine: EngineSection,
    pub batch: BatchSection,
    pub service: ServiceSection,
}

impl Config {
    /// Defaults when `path` is `None`. Relative asset paths resolve against
    /// the config file's directory. Environment overrides are applied last.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            None => Config::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                let mut cfg = Self::parse(&text).map_err(|message| ConfigError::Parse {
                    path: p.to_path_buf(),
                    message,
                })?;
                if let Some(dir) = p.parent() {
                    cfg.resolve_paths(dir);
                }
                cfg
            }
        };
        cfg.apply_env(|k| std::env::var(k).ok());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.oracle.positive_terms,
            &mut self.oracle.negative_terms,
            &mut self.rewriter.mock_table,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if self.service.store.is_relative() {
            self.service.store = base.join(&self.service.store);
        }
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(v) = get("COUNTERFRAME_ORACLE_ENDPOINT") {
            self.oracle.remote.endpoint = v;
            self.oracle.kind = OracleKind::Remote;
        }
        if let Some(v) = get("COUNTERFRAME_REWRITER_ENDPOINT") {
            self.rewriter.remote.endpoint = v;
            self.rewriter.kind = RewriterKind::Remote;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        ClassThresholds::new(self.thresholds.tau)
            .map_err(|e| ConfigError::Invalid(format!("thresholds.tau: {e}")))?;
        if self.batch.parallelism == 0 {
            return Err(ConfigError::Invalid("batch.parallelism must be at least 1".into()));
        }
        if self.service.workers == 0 {
            return Err(ConfigError::Invalid("service.workers must be at least 1".into()));
        }
        let mut seen = self.engine.category_order.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.engine.category_order.len() {
            return Err(ConfigError::Invalid("engine.category_order repeats a category".into()));
        }
        Ok(())
    }

    pub fn thresholds(&self) -> ClassThresholds {
        ClassThresholds::new(self.thresholds.tau).expect("validated")
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            target: TargetSentiment {
                class: self.engine.target_class,
                or_better: self.engine.target_or_better,
            },
            category_order: self.engine.category_order.clone(),
            thresholds: self.thresholds(),
            selection: self.engine.selection,
            seed: self.engine.seed,
            pre_check: self.engine.pre_check,
        }
    }

    /// True when both clients are local and deterministic.
    pub fn is_offline(&self) -> bool {
        self.oracle.kind == OracleKind::Lexicon && self.rewriter.kind == RewriterKind::Mock
    }

    pub fn build_oracle(&self) -> Result<SharedOracle, ConfigError> {
        Ok(match self.oracle.kind {
            OracleKind::Lexicon => Arc::new(load_lexicon(
                self.oracle.positive_terms.as_deref(),
                self.oracle.negative_terms.as_deref(),
                self.oracle.alpha,
            )?),
            OracleKind::Remote => Arc::new(RemoteOracle::from_env(self.oracle.remote.clone())?),
        })
    }

    pub fn build_rewriter(&self) -> Result<SharedRewriter, ConfigError> {
        Ok(match self.rewriter.kind {
            RewriterKind::Mock => {
                let table = match &self.rewriter.mock_table {
                    Some(p) => load_mock_table(p)?,
                    None => MockTable::builtin(),
                };
                let rw = MockRewriter::new(table, self.rewriter.mock_seed);
                rw.validate_complete()?;
                Arc::new(rw)
            }
            RewriterKind::Remote => Arc::new(RemoteRewriter::from_env(self.rewriter.remote.clone())?),
        })
    }
}

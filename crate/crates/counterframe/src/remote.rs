//! Blocking HTTP clients for a remote sentiment oracle and a remote LLM
//! rewriter.
//!
//! Oracle: `POST {"text": ..}` → `{"p_neg": .., "p_neu": .., "p_pos": ..}`.
//! Rewriter: `POST {"system", "user", "max_tokens", "temperature"}` →
//! `{"text": ..}`.
//!
//! Transport failures, timeouts, 429 and 5xx responses are retried with
//! exponential backoff; other 4xx responses fail at once.

use std::fmt;
use std::time::Duration;

use counterframe_core::prompt::construct_prompt;
use counterframe_core::{ClientError, LengthBand, ModificationType, Rewriter, SentimentOracle, SentimentProbs};
use serde::{Deserialize, Serialize};

pub const ORACLE_KEY_VAR: &str = "ORACLE_API_KEY";
pub const REWRITER_KEY_VAR: &str = "REWRITER_API_KEY";

/// API key; never printed and never serialized.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn from_env(var: &str) -> Option<Self> {
        std::env::var(var).ok().filter(|v| !v.is_empty()).map(Self)
    }

    fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(***)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff_ms: u64,
    /// Adds up to 50% random extra delay to each backoff.
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            backoff_ms: 500,
            jitter: true,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based): `backoff · 2^retry`.
    pub fn delay(&self, retry: u32) -> Duration {
        let base = self.backoff_ms.saturating_mul(1u64 << retry.min(16));
        let extra = if self.jitter {
            (base as f64 * 0.5 * rand::random::<f64>()) as u64
        } else {
            0
        };
        Duration::from_millis(base + extra)
    }
}

enum Attempt<T> {
    Done(T),
    Retry(String),
    Fail(ClientError),
}

fn with_retries<T>(policy: &RetryPolicy, mut op: impl FnMut() -> Attempt<T>) -> Result<T, ClientError> {
    let mut reason = String::new();
    for attempt in 0..=policy.max_retries {
        if attempt > 0 {
            std::thread::sleep(policy.delay(attempt - 1));
        }
        match op() {
            Attempt::Done(v) => return Ok(v),
            Attempt::Fail(e) => return Err(e),
            Attempt::Retry(r) => {
                tracing::debug!(attempt, reason = %r, "retrying request");
                reason = r;
            }
        }
    }
    Err(ClientError::Unavailable {
        attempts: policy.max_retries + 1,
        reason,
    })
}

fn post_json<Req: Serialize>(
    agent: &ureq::Agent,
    endpoint: &str,
    key: Option<&Secret>,
    body: &Req,
) -> Attempt<String> {
    let mut req = agent.post(endpoint).set("Content-Type", "application/json");
    if let Some(k) = key {
        req = req.set("Authorization", &format!("Bearer {}", k.expose()));
    }
    let payload = match serde_json::to_string(body) {
        Ok(p) => p,
        Err(e) => return Attempt::Fail(ClientError::InvalidInput(e.to_string())),
    };
    match req.send_string(&payload) {
        Ok(resp) => match resp.into_string() {
            Ok(s) => Attempt::Done(s),
            Err(e) => Attempt::Retry(format!("reading response: {e}")),
        },
        Err(ureq::Error::Status(status, resp)) => {
            let message = resp.into_string().unwrap_or_default();
            if status == 429 || status >= 500 {
                Attempt::Retry(format!("status {status}"))
            } else {
                Attempt::Fail(ClientError::Rejected {
                    status,
                    message: truncate(&message, 200),
                })
            }
        }
        Err(ureq::Error::Transport(t)) => Attempt::Retry(t.to_string()),
    }
}

fn truncate(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => format!("{}…", &s[..i]),
        None => s.to_string(),
    }
}

fn agent(timeout_ms: u64) -> ureq::Agent {
    ureq::AgentBuilder::new()
        .timeout(Duration::from_millis(timeout_ms))
        .build()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteOracleConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    #[serde(flatten)]
    pub retry: RetryPolicy,
}

impl Default for RemoteOracleConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            timeout_ms: 10_000,
            retry: RetryPolicy::default(),
        }
    }
}

pub struct RemoteOracle {
    config: RemoteOracleConfig,
    key: Option<Secret>,
    agent: ureq::Agent,
}

impl RemoteOracle {
    pub fn new(config: RemoteOracleConfig, key: Option<Secret>) -> Result<Self, ClientError> {
        if config.endpoint.is_empty() {
            return Err(ClientError::Config("oracle endpoint is not set".into()));
        }
        Ok(Self {
            agent: agent(config.timeout_ms),
            config,
            key,
        })
    }

    /// Reads the key from `ORACLE_API_KEY`.
    pub fn from_env(config: RemoteOracleConfig) -> Result<Self, ClientError> {
        Self::new(config, Secret::from_env(ORACLE_KEY_VAR))
    }
}

#[derive(Serialize)]
struct OracleRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct OracleResponse {
    p_neg: f64,
    p_neu: f64,
    p_pos: f64,
}

impl SentimentOracle for RemoteOracle {
    fn predict(&self, text: &str) -> Result<SentimentProbs, ClientError> {
        if text.trim().is_empty() {
            return Err(ClientError::InvalidInput("text is empty".into()));
        }
        let body = with_retries(&self.config.retry, || {
            post_json(&self.agent, &self.config.endpoint, self.key.as_ref(), &OracleRequest { text })
        })?;
        let r: OracleResponse = serde_json::from_str(&body)
            .map_err(|e| ClientError::Protocol(format!("oracle response: {e}")))?;
        SentimentProbs::new(r.p_neg, r.p_neu, r.p_pos)
            .map_err(|e| ClientError::Protocol(format!("oracle response: {e}")))
    }

    fn describe(&self) -> String {
        format!("remote-oracle(endpoint={})", self.config.endpoint)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteRewriterConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    #[serde(flatten)]
    pub retry: RetryPolicy,
    pub max_tokens: u32,
    pub temperature: f64,
    pub length_tolerance: f64,
}

impl Default for RemoteRewriterConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            timeout_ms: 60_000,
            retry: RetryPolicy::default(),
            max_tokens: 1024,
            temperature: 0.0,
            length_tolerance: LengthBand::default().tolerance,
        }
    }
}

pub struct RemoteRewriter {
    config: RemoteRewriterConfig,
    key: Option<Secret>,
    agent: ureq::Agent,
}

impl RemoteRewriter {
    pub fn new(config: RemoteRewriterConfig, key: Option<Secret>) -> Result<Self, ClientError> {
        if config.endpoint.is_empty() {
            return Err(ClientError::Config("rewriter endpoint is not set".into()));
        }
        if !(0.0..1.0).contains(&config.length_tolerance) {
            return Err(ClientError::Config("length_tolerance must be in [0, 1)".into()));
        }
        Ok(Self {
            agent: agent(config.timeout_ms),
            config,
            key,
        })
    }

    /// Reads the key from `REWRITER_API_KEY`.
    pub fn from_env(config: RemoteRewriterConfig) -> Result<Self, ClientError> {
        Self::new(config, Secret::from_env(REWRITER_KEY_VAR))
    }

    fn complete(&self, system: &str, user: &str) -> Result<String, ClientError> {
        let req = RewriterRequest {
            system,
            user,
            max_tokens: self.config.max_tokens,
            temperature: self.config.temperature,
        };
        let body = with_retries(&self.config.retry, || {
            post_json(&self.agent, &self.config.endpoint, self.key.as_ref(), &req)
        })?;
        let r: RewriterResponse = serde_json::from_str(&body)
            .map_err(|e| ClientError::Protocol(format!("rewriter response: {e}")))?;
        Ok(r.text)
    }
}

#[derive(Serialize)]
struct RewriterRequest<'a> {
    system: &'a str,
    user: &'a str,
    max_tokens: u32,
    temperature: f64,
}

#[derive(Deserialize)]
struct RewriterResponse {
    text: String,
}

impl Rewriter for RemoteRewriter {
    /// Out-of-band completions are re-requested with the violation appended
    /// to the user prompt, up to `max_retries` times.
    fn rewrite(&self, text: &str, modification: &ModificationType) -> Result<String, ClientError> {
        let prompt = construct_prompt(text, modification)?;
        let band = LengthBand {
            tolerance: self.config.length_tolerance,
        };
        let mut user = prompt.user.clone();
        let mut last = (0, 0, 0);
        for _ in 0..=self.config.retry.max_retries {
            let out = self.complete(&prompt.system, &user)?;
            let out = out.trim();
            if out.is_empty() {
                return Err(ClientError::RewriteEmpty);
            }
            match band.check(text, out) {
                Ok(()) => return Ok(out.to_string()),
                Err((tokens, min, max)) => {
                    last = (tokens, min, max);
                    user = format!(
                        "{}\n\nYour previous rewrite had {tokens} words. The rewrite must have \
                         between {min} and {max} words. Rewrite the original text again.",
                        prompt.user
                    );
                }
            }
        }
        Err(ClientError::RewriteOutOfBand {
            attempts: self.config.retry.max_retries + 1,
            tokens: last.0,
            min: last.1,
            max: last.2,
        })
    }

    fn describe(&self) -> String {
        format!(
            "remote-rewriter(endpoint={},max_tokens={},temperature={},length_tolerance={})",
            self.config.endpoint,
            self.config.max_tokens,
            self.config.temperature,
            self.config.length_tolerance
        )
    }
}

//! Language-model inference: request/response types, the backend trait,
//! JSON response parsing, response caching, an HTTP chat-completion client
//! and a deterministic scripted oracle used in tests and desk-scale runs.

mod cache;
mod http;
mod parse;
pub mod scripted;

use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::CachedBackend;
pub use http::{HttpBackend, HttpConfig};
pub use parse::{parse_action, parse_index, parse_score};
pub use scripted::ScriptedOracle;

use crate::model::hex_string;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("backend configuration error: {0}")]
    Config(String),
    /// Retryable failure (network, 5xx, rate limiting).
    #[error("transient backend failure: {0}")]
    Transient(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("could not parse model output: {0}")]
    Parse(String),
    #[error("response cache error: {0}")]
    Cache(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message { role: Role::System, content: content.into() }
    }
    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: Role::Assistant, content: content.into() }
    }
}

/// What a completion is for; lets test doubles dispatch on intent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Act,
    Select,
    AnalyzeFrontier,
    Reflect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub purpose: Purpose,
}

impl ChatRequest {
    pub fn new(purpose: Purpose, messages: Vec<Message>, temperature: f64) -> Self {
        ChatRequest { messages, temperature, purpose }
    }

    /// Stable digest of the full request, used as a cache key.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("request serializes");
        hex_string(&Sha256::digest(canonical.as_bytes()))
    }

    /// All message contents joined, in order.
    pub fn rendered(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&m.content);
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenUsage {
    pub fn add(&mut self, other: TokenUsage) {
        self.prompt_tokens += other.prompt_tokens;
        self.completion_tokens += other.completion_tokens;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub token_usage: TokenUsage,
    pub backend_id: String,
}

/// `{"thought": ..., "action": ...}` returned by the acting policy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionDecision {
    pub thought: String,
    pub action: String,
}

/// `{"thought": ..., "index": ...}` returned by state selection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexDecision {
    pub thought: String,
    pub index: usize,
}

pub trait ChatBackend: Send {
    fn backend_id(&self) -> String;
    fn complete(&mut self, request: &ChatRequest) -> Result<ChatResponse, LlmError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn backend_id(&self) -> String {
        (**self).backend_id()
    }
    fn complete(&mut self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(request)
    }
}

/// Runs `f`, retrying transient failures up to `max_retries` times with
/// exponential backoff starting at `base_delay`.
pub fn with_retries<T>(
    max_retries: u32,
    base_delay: Duration,
    mut f: impl FnMut() -> Result<T, LlmError>,
) -> Result<T, LlmError> {
    let mut attempt = 0;
    loop {
        match f() {
            Err(LlmError::Transient(msg)) => {
                if attempt >= max_retries {
                    return Err(LlmError::Backend(format!("gave up after {} attempts: {msg}", attempt + 1)));
                }
                let delay = base_delay.saturating_mul(1 << attempt.min(16));
                log::warn!("transient backend failure ({msg}); retrying in {delay:?}");
                thread::sleep(delay);
                attempt += 1;
            }
            other => return other,
        }
    }
}

/// Backend selection as written in run configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Scripted,
    Http(HttpConfig),
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Scripted
    }
}

/// Builds the configured backend for one seed, optionally wrapped in a
/// response cache stored under `cache_dir`.
pub fn build_backend(
    config: &BackendConfig,
    seed: u64,
    cache_dir: Option<&PathBuf>,
) -> Result<Box<dyn ChatBackend>, LlmError> {
    let inner: Box<dyn ChatBackend> = match config {
        BackendConfig::Scripted => Box::new(ScriptedOracle::new(seed)),
        BackendConfig::Http(cfg) => Box::new(HttpBackend::new(cfg.clone())?),
    };
    match cache_dir {
        Some(dir) => Ok(Box::new(CachedBackend::persistent(inner, dir, &format!("seed{seed}"))?)),
        None => Ok(inner),
    }
}

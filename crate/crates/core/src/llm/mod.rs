//! Chat-completion client with interchangeable backends.
//!
//! [`LiveBackend`] speaks the chat-completions JSON protocol over HTTP,
//! [`CachedBackend`] wraps any backend with an on-disk response store, and
//! [`MockBackend`] answers from a rules file. The pipeline only sees
//! [`LlmClient`], so online, cached and offline runs share one code path.

mod cache;
mod live;
mod mock;

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::CachedBackend;
pub use live::{complete, EndpointConfig, LiveBackend};
pub use mock::{MockBackend, MockRule, MockRules};

/// What a prompt is for. Mock rules select on it; it is not sent over the
/// wire and does not enter the cache key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Augment,
    PruneMultipleChoice,
    PruneBinary,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub kind: PromptKind,
    pub model: String,
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BackendKind {
    Live,
    Cache,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub backend: BackendKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("authentication rejected by endpoint (HTTP {status})")]
    Auth { status: u16 },
    #[error("rate limited (HTTP 429) after {retries} retries")]
    RateLimited { retries: u32 },
    #[error("request timed out after {retries} retries")]
    Timeout { retries: u32 },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("response cache: {0}")]
    Cache(String),
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError>;
}

/// Stable hex SHA-256 over model, prompts, temperature and max_tokens.
pub fn cache_key(req: &ChatRequest) -> String {
    #[derive(Serialize)]
    struct KeyFields<'a> {
        model: &'a str,
        system_prompt: &'a str,
        user_prompt: &'a str,
        temperature: f64,
        max_tokens: u32,
    }
    let canonical = serde_json::to_string(&KeyFields {
        model: &req.model,
        system_prompt: &req.system_prompt,
        user_prompt: &req.user_prompt,
        temperature: req.temperature,
        max_tokens: req.max_tokens,
    })
    .expect("key fields serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Request fields the pipeline does not vary per prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestSettings {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for RequestSettings {
    fn default() -> Self {
        RequestSettings {
            model: "gpt-3.5-turbo-0125".to_string(),
            temperature: 0.0,
            max_tokens: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClientStats {
    pub calls: usize,
    pub cache_hits: usize,
    pub errors: usize,
}

/// Shareable front end over a backend. Counts calls for run summaries.
#[derive(Clone)]
pub struct LlmClient {
    backend: Arc<dyn ChatBackend>,
    settings: RequestSettings,
    calls: Arc<AtomicUsize>,
    cache_hits: Arc<AtomicUsize>,
    errors: Arc<AtomicUsize>,
}

impl fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LlmClient").field("settings", &self.settings).field("stats", &self.stats()).finish()
    }
}

impl LlmClient {
    pub fn new(backend: Arc<dyn ChatBackend>, settings: RequestSettings) -> Self {
        LlmClient {
            backend,
            settings,
            calls: Arc::default(),
            cache_hits: Arc::default(),
            errors: Arc::default(),
        }
    }

    pub fn settings(&self) -> &RequestSettings {
        &self.settings
    }

    pub fn request(&self, kind: PromptKind, system_prompt: String, user_prompt: String) -> ChatRequest {
        ChatRequest {
            kind,
            model: self.settings.model.clone(),
            system_prompt,
            user_prompt,
            temperature: self.settings.temperature,
            max_tokens: self.settings.max_tokens,
        }
    }

    pub fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        if req.user_prompt.is_empty() {
            self.errors.fetch_add(1, Ordering::Relaxed);
            return Err(LlmError::InvalidRequest("user prompt is empty".into()));
        }
        let result = self.backend.complete(req);
        match &result {
            Ok(resp) if resp.backend == BackendKind::Cache => {
                self.cache_hits.fetch_add(1, Ordering::Relaxed);
            }
            Ok(_) => {}
            Err(_) => {
                self.errors.fetch_add(1, Ordering::Relaxed);
            }
        }
        result
    }

    pub fn stats(&self) -> ClientStats {
        ClientStats {
            calls: self.calls.load(Ordering::Relaxed),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
            errors: self.errors.load(Ordering::Relaxed),
        }
    }
}

fn rough_token_count(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

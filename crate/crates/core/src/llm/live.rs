use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use super::{BackendKind, ChatBackend, ChatRequest, ChatResponse, LlmError};

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    /// Either the API root (`https://host/v1`) or the full
    /// `.../chat/completions` URL.
    pub base_url: String,
    /// Environment variable holding the bearer token. Unset means no
    /// Authorization header.
    pub api_key_env: String,
    pub timeout: Duration,
    pub max_retries: u32,
    /// Delay before the first retry, doubled for every further one.
    pub retry_backoff: Duration,
    pub max_concurrent_requests: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "https://api.openai.com/v1".to_string(),
            api_key_env: "LLM_API_KEY".to_string(),
            timeout: Duration::from_secs(60),
            max_retries: 3,
            retry_backoff: Duration::from_millis(500),
            max_concurrent_requests: 4,
        }
    }
}

impl EndpointConfig {
    pub fn completions_url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

/// Counting semaphore bounding in-flight HTTP requests.
struct Semaphore {
    available: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            available: Mutex::new(n.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.freed.notify_one();
    }
}

enum Attempt {
    Done(ChatResponse),
    Retryable(LlmError),
    Fatal(LlmError),
}

pub struct LiveBackend {
    cfg: EndpointConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
    in_flight: Semaphore,
    retries: AtomicU32,
}

impl LiveBackend {
    /// Reads the API key from the configured environment variable once.
    pub fn new(cfg: EndpointConfig) -> Self {
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        Self::with_api_key(cfg, api_key)
    }

    pub fn with_api_key(cfg: EndpointConfig, api_key: Option<String>) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(cfg.timeout).build();
        let in_flight = Semaphore::new(cfg.max_concurrent_requests);
        LiveBackend {
            cfg,
            agent,
            api_key,
            in_flight,
            retries: AtomicU32::new(0),
        }
    }

    /// Retries performed over the backend's lifetime.
    pub fn retries(&self) -> u32 {
        self.retries.load(Ordering::Relaxed)
    }

    fn body(req: &ChatRequest) -> Value {
        let mut messages = Vec::new();
        if !req.system_prompt.is_empty() {
            messages.push(json!({"role": "system", "content": req.system_prompt}));
        }
        messages.push(json!({"role": "user", "content": req.user_prompt}));
        json!({
            "model": req.model,
            "messages": messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        })
    }

    fn attempt(&self, url: &str, body: &Value, retries_so_far: u32) -> Attempt {
        let _permit = self.in_flight.acquire();
        let mut call = self.agent.post(url).set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.set("Authorization", &format!("Bearer {key}"));
        }
        match call.send_string(&body.to_string()) {
            Ok(resp) => match resp.into_string() {
                Ok(text) => match parse_completion(&text) {
                    Ok(r) => Attempt::Done(r),
                    Err(e) => Attempt::Fatal(e),
                },
                Err(e) if is_timeout(&e) => Attempt::Retryable(LlmError::Timeout { retries: retries_so_far }),
                Err(e) => Attempt::Retryable(LlmError::Transport(e.to_string())),
            },
            Err(ureq::Error::Status(status, resp)) => {
                let body = resp.into_string().unwrap_or_default();
                match status {
                    401 | 403 => Attempt::Fatal(LlmError::Auth { status }),
                    429 => Attempt::Retryable(LlmError::RateLimited { retries: retries_so_far }),
                    500..=599 => Attempt::Retryable(LlmError::Http { status, body }),
                    _ => Attempt::Fatal(LlmError::Http { status, body }),
                }
            }
            Err(ureq::Error::Transport(t)) => {
                if transport_is_timeout(&t) {
                    Attempt::Retryable(LlmError::Timeout { retries: retries_so_far })
                } else {
                    Attempt::Retryable(LlmError::Transport(t.to_string()))
                }
            }
        }
    }
}

impl ChatBackend for LiveBackend {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let url = self.cfg.completions_url();
        let body = Self::body(req);
        let mut backoff = self.cfg.retry_backoff;
        let mut retries = 0;
        loop {
            match self.attempt(&url, &body, retries) {
                Attempt::Done(resp) => return Ok(resp),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retryable(e) if retries >= self.cfg.max_retries => {
                    return Err(match e {
                        LlmError::RateLimited { .. } => LlmError::RateLimited { retries },
                        LlmError::Timeout { .. } => LlmError::Timeout { retries },
                        other => other,
                    })
                }
                Attempt::Retryable(e) => {
                    log::debug!("retrying after {e} (retry {} of {})", retries + 1, self.cfg.max_retries);
                    std::thread::sleep(backoff);
                    backoff = backoff.saturating_mul(2);
                    retries += 1;
                    self.retries.fetch_add(1, Ordering::Relaxed);
                }
            }
        }
    }
}

/// One-shot completion against a live endpoint.
pub fn complete(cfg: &EndpointConfig, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
    LiveBackend::new(cfg.clone()).complete(req)
}

fn parse_completion(text: &str) -> Result<ChatResponse, LlmError> {
    let v: Value = serde_json::from_str(text).map_err(|e| LlmError::MalformedResponse(format!("not JSON: {e}")))?;
    let content = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::MalformedResponse("missing choices[0].message.content".into()))?;
    let usage = |field: &str| v.pointer(&format!("/usage/{field}")).and_then(Value::as_u64).unwrap_or(0);
    Ok(ChatResponse {
        text: content.to_string(),
        prompt_tokens: usage("prompt_tokens"),
        completion_tokens: usage("completion_tokens"),
        backend: BackendKind::Live,
    })
}

fn is_timeout(e: &std::io::Error) -> bool {
    matches!(e.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock)
}

fn transport_is_timeout(t: &ureq::Transport) -> bool {
    let mut source: Option<&(dyn std::error::Error + 'static)> = std::error::Error::source(t);
    while let Some(err) = source {
        if let Some(io) = err.downcast_ref::<std::io::Error>() {
            if is_timeout(io) {
                return true;
            }
        }
        source = err.source();
    }
    t.to_string().contains("timed out")
}

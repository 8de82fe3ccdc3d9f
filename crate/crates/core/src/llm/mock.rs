use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{rough_token_count, BackendKind, ChatBackend, ChatRequest, ChatResponse, LlmError, PromptKind};

/// One canned answer. Matches when `kind` (if given) equals the request's
/// kind and the user prompt contains `contains`. Exactly one of `response`
/// and `echo` must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<PromptKind>,
    #[serde(default)]
    pub contains: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    /// Reply with the user prompt itself.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub echo: bool,
}

/// Rules are tried in file order; the first match answers. Unmatched
/// requests get the per-kind default, or an empty reply.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRules {
    #[serde(default)]
    pub rules: Vec<MockRule>,
    #[serde(default)]
    pub defaults: BTreeMap<PromptKind, String>,
}

impl MockRules {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rules: MockRules =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        rules.validate()?;
        Ok(rules)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rules.iter().enumerate() {
            if r.echo == r.response.is_some() {
                return Err(Error::Config(format!("mock rule {i}: set exactly one of \"response\" and \"echo\"")));
            }
        }
        Ok(())
    }

    pub fn with_rule(mut self, kind: Option<PromptKind>, contains: &str, response: &str) -> Self {
        self.rules.push(MockRule {
            kind,
            contains: contains.to_string(),
            response: Some(response.to_string()),
            echo: false,
        });
        self
    }

    pub fn with_default(mut self, kind: PromptKind, response: &str) -> Self {
        self.defaults.insert(kind, response.to_string());
        self
    }

    fn answer(&self, req: &ChatRequest) -> String {
        for rule in &self.rules {
            if rule.kind.is_some_and(|k| k != req.kind) || !req.user_prompt.contains(&rule.contains) {
                continue;
            }
            return if rule.echo {
                req.user_prompt.clone()
            } else {
                rule.response.clone().unwrap_or_default()
            };
        }
        self.defaults.get(&req.kind).cloned().unwrap_or_default()
    }
}

/// Deterministic offline backend: a pure function of the request.
#[derive(Debug, Clone)]
pub struct MockBackend {
    rules: MockRules,
}

impl MockBackend {
    pub fn new(rules: MockRules) -> Self {
        MockBackend { rules }
    }

    pub fn echo() -> Self {
        MockBackend::new(MockRules {
            rules: vec![MockRule {
                kind: None,
                contains: String::new(),
                response: None,
                echo: true,
            }],
            defaults: BTreeMap::new(),
        })
    }
}

impl ChatBackend for MockBackend {
    fn complete(&self, req: &ChatRequest) -> std::result::Result<ChatResponse, LlmError> {
        let text = self.rules.answer(req);
        Ok(ChatResponse {
            prompt_tokens: rough_token_count(&req.system_prompt) + rough_token_count(&req.user_prompt),
            completion_tokens: rough_token_count(&text),
            text,
            backend: BackendKind::Mock,
        })
    }
}

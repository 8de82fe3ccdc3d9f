//! Alternate-phrasing generation: ask the LLM for synonyms of a mention
//! and turn its reply into clean query strings.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::llm::{LlmClient, LlmError, PromptKind};
use crate::matchers::normalize_text;
use crate::prompts::PromptTemplates;

static NUMBERED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*\d+\s*[.)]\s*(.*)$").unwrap());
static BULLETED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*[-*\u{2022}]\s+(.*)$").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternateSet {
    pub original: String,
    /// Unique after normalization, never the original, at most k.
    pub alternates: Vec<String>,
    pub raw_response: String,
}

/// First JSON array of strings found anywhere in the text.
fn json_string_array(text: &str) -> Option<Vec<String>> {
    text.match_indices('[').find_map(|(i, _)| {
        serde_json::Deserializer::from_str(&text[i..])
            .into_iter::<Vec<String>>()
            .next()
            .and_then(Result::ok)
    })
}

fn clean(item: &str) -> String {
    const QUOTES: &[(char, char)] = &[('"', '"'), ('\'', '\''), ('`', '`'), ('\u{201C}', '\u{201D}'), ('\u{2018}', '\u{2019}')];
    let mut s = item.trim();
    loop {
        let before = s;
        s = s.trim_end_matches(['.', ',', ';', ':', '!']).trim();
        for &(open, close) in QUOTES {
            if s.len() >= open.len_utf8() + close.len_utf8() && s.starts_with(open) && s.ends_with(close) {
                s = s[open.len_utf8()..s.len() - close.len_utf8()].trim();
            }
        }
        if s == before {
            return s.to_string();
        }
    }
}

fn candidate_lines(text: &str) -> Vec<String> {
    if let Some(items) = json_string_array(text) {
        return items;
    }
    let numbered: Vec<String> = text
        .lines()
        .filter_map(|l| NUMBERED.captures(l).map(|c| c[1].to_string()))
        .collect();
    if !numbered.is_empty() {
        return numbered;
    }
    let bulleted: Vec<String> = text
        .lines()
        .filter_map(|l| BULLETED.captures(l).map(|c| c[1].to_string()))
        .collect();
    if !bulleted.is_empty() {
        return bulleted;
    }
    text.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect()
}

/// Extracts up to `k` alternates from an LLM reply. Sources, in priority
/// order: a JSON string array, numbered lines, bulleted lines, any
/// non-empty line. Unusable text yields no alternates.
pub fn parse_alternates(llm_text: &str, k: usize, original: &str) -> AlternateSet {
    let mut seen: HashSet<String> = HashSet::new();
    seen.insert(normalize_text(original));
    let mut alternates = Vec::new();
    for item in candidate_lines(llm_text) {
        if alternates.len() >= k {
            break;
        }
        let cleaned = clean(&item);
        let key = normalize_text(&cleaned);
        if key.is_empty() || !seen.insert(key) {
            continue;
        }
        alternates.push(cleaned);
    }
    AlternateSet {
        original: original.to_string(),
        alternates,
        raw_response: llm_text.to_string(),
    }
}

/// Builds the alternate-phrasing prompt, calls the LLM and parses the reply.
pub fn generate_alternates(
    client: &LlmClient,
    templates: &PromptTemplates,
    mention_text: &str,
    context: &str,
    k: usize,
) -> Result<AlternateSet, LlmError> {
    if mention_text.trim().is_empty() {
        return Err(LlmError::InvalidRequest("mention text is empty".into()));
    }
    let k_str = k.to_string();
    let system = templates.render("augment.system", &[]);
    let user = templates.render(
        "augment.user",
        &[("mention", mention_text), ("context", context), ("k", &k_str)],
    );
    let resp = client.complete(&client.request(PromptKind::Augment, system, user))?;
    Ok(parse_alternates(&resp.text, k, mention_text))
}

//! Prompt template file.
//!
//! Plain text split into `[section]` blocks; `#` lines before the first
//! header are comments. Sections absent from a user file fall back to the
//! built-in defaults, so a file may override just one prompt.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use crate::error::{Error, Result};

pub const DEFAULT_TEMPLATES: &str = include_str!("../templates/prompts.txt");

static HEADER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\[([a-z_.]+)\]\s*$").unwrap());
static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([a-z_]+)\}").unwrap());

/// Known sections and the placeholders each may use.
const SECTIONS: &[(&str, &[&str])] = &[
    ("augment.system", &[]),
    ("augment.user", &["mention", "context", "k"]),
    ("prune.system", &[]),
    (
        "prune.multiple_choice.user",
        &["mention", "context", "candidates", "answer_instruction", "reasoning"],
    ),
    ("prune.binary.user", &["mention", "context", "candidate", "answer_instruction", "reasoning"]),
    ("prune.answer.cui", &[]),
    ("prune.answer.index", &[]),
    ("prune.answer.binary", &[]),
    ("prune.reasoning.cot", &[]),
    ("prune.reasoning.direct", &[]),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplates {
    sections: BTreeMap<String, String>,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        let sections = parse_sections(DEFAULT_TEMPLATES, "built-in templates").expect("built-in templates parse");
        PromptTemplates { sections }
    }
}

fn parse_sections(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut sections: BTreeMap<String, String> = BTreeMap::new();
    let mut current: Option<(String, Vec<&str>)> = None;

    let finish = |cur: Option<(String, Vec<&str>)>, sections: &mut BTreeMap<String, String>| {
        if let Some((name, lines)) = cur {
            sections.insert(name, lines.join("\n").trim().to_string());
        }
    };

    for (i, line) in text.lines().enumerate() {
        if let Some(cap) = HEADER.captures(line) {
            let name = cap[1].to_string();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(Error::Template(format!("{origin}:{}: unknown section [{name}]", i + 1)));
            }
            if sections.contains_key(&name) || current.as_ref().is_some_and(|(n, _)| *n == name) {
                return Err(Error::Template(format!("{origin}:{}: duplicate section [{name}]", i + 1)));
            }
            finish(current.take(), &mut sections);
            current = Some((name, Vec::new()));
            continue;
        }
        match &mut current {
            Some((_, lines)) => lines.push(line),
            None if line.trim().is_empty() || line.starts_with('#') => {}
            None => {
                return Err(Error::Template(format!("{origin}:{}: text before the first [section] header", i + 1)));
            }
        }
    }
    finish(current, &mut sections);

    for (name, body) in &sections {
        let allowed = SECTIONS.iter().find(|(s, _)| s == name).map(|(_, a)| *a).unwrap_or(&[]);
        for cap in PLACEHOLDER.captures_iter(body) {
            if !allowed.contains(&&cap[1]) {
                return Err(Error::Template(format!(
                    "{origin}: placeholder {{{}}} is not available in [{name}]",
                    &cap[1]
                )));
            }
        }
    }
    Ok(sections)
}

impl PromptTemplates {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut merged = PromptTemplates::default().sections;
        merged.extend(parse_sections(text, origin)?);
        Ok(PromptTemplates { sections: merged })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn section(&self, name: &str) -> &str {
        self.sections.get(name).map(String::as_str).unwrap_or("")
    }

    /// Fills `{name}` placeholders of a section in a single pass, so
    /// substituted values are never re-expanded.
    pub fn render(&self, name: &str, values: &[(&str, &str)]) -> String {
        PLACEHOLDER
            .replace_all(self.section(name), |cap: &regex::Captures<'_>| {
                values
                    .iter()
                    .find(|(k, _)| *k == &cap[1])
                    .map(|(_, v)| v.to_string())
                    .unwrap_or_else(|| cap[0].to_string())
            })
            .into_owned()
    }
}

//! Candidate pruning: show the matcher's candidates to the LLM and keep
//! the ones it accepts.
//!
//! Multiple-choice modes present every candidate in one prompt and read
//! back either CUIs or 1-based indices. Binary mode asks one yes/no
//! question per candidate. Chain-of-thought variants ask for reasoning and
//! read the answer after the last `ANSWER:` sentinel. A reply that cannot
//! be parsed keeps the candidates it was about, and Top1 re-admits the
//! first-ranked candidate when everything was rejected.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::llm::{LlmClient, LlmError, PromptKind};
use crate::ontology::{ConceptDictionary, ConceptId};
use crate::par;
use crate::prompts::PromptTemplates;

static ANSWER_SENTINEL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)answer\s*:").unwrap());
static INTEGER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b\d+\b").unwrap());
static CUI: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\bC\d{7}\b").unwrap());
static YES_NO: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\b(yes|no)\b").unwrap());
static NONE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bnone\b").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneMode {
    #[serde(alias = "mc_cui")]
    MultipleChoiceCui,
    #[serde(alias = "mc_index")]
    MultipleChoiceIndex,
    Binary,
}

impl PruneMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PruneMode::MultipleChoiceCui => "multiple_choice_cui",
            PruneMode::MultipleChoiceIndex => "multiple_choice_index",
            PruneMode::Binary => "binary",
        }
    }
}

impl fmt::Display for PruneMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PruneMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "multiple_choice_cui" | "mc_cui" => Ok(PruneMode::MultipleChoiceCui),
            "multiple_choice_index" | "mc_index" => Ok(PruneMode::MultipleChoiceIndex),
            "binary" => Ok(PruneMode::Binary),
            other => Err(Error::Config(format!(
                "unknown prune mode {other:?} (expected multiple_choice_cui, multiple_choice_index or binary)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneStrategy {
    pub mode: PruneMode,
    pub chain_of_thought: bool,
    /// Always keep the first-ranked candidate.
    pub top1: bool,
}

/// A candidate as rendered in the prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresentedConcept {
    pub cui: ConceptId,
    pub preferred_term: String,
    pub semantic_types: Vec<String>,
}

impl PresentedConcept {
    /// Falls back to `fallback_term` with no types if the CUI is unknown.
    pub fn lookup(dict: &ConceptDictionary, cui: &ConceptId, fallback_term: &str) -> Self {
        match dict.get(cui) {
            Some(c) => PresentedConcept {
                cui: cui.clone(),
                preferred_term: c.preferred_term.clone(),
                semantic_types: c.semantic_types.iter().cloned().collect(),
            },
            None => PresentedConcept {
                cui: cui.clone(),
                preferred_term: fallback_term.to_string(),
                semantic_types: Vec::new(),
            },
        }
    }

    fn render(&self) -> String {
        format!("{} \u{2014} {} [{}]", self.cui, self.preferred_term, self.semantic_types.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptText {
    pub kind: PromptKind,
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no usable answer in LLM response")]
pub struct ParseFailure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneVerdict {
    /// In input (ranking) order.
    pub accepted: Vec<ConceptId>,
    pub rejected: Vec<ConceptId>,
    pub raw_responses: Vec<String>,
    /// Responses that could not be parsed; their candidates were kept.
    pub parse_failures: usize,
    pub top1_applied: bool,
}

/// One prompt for multiple-choice modes, one per candidate for binary.
pub fn build_prune_prompt(
    templates: &PromptTemplates,
    mention_text: &str,
    context: &str,
    candidates: &[PresentedConcept],
    strategy: &PruneStrategy,
) -> Result<Vec<PromptText>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let system = templates.render("prune.system", &[]);
    let reasoning = if strategy.chain_of_thought {
        templates.render("prune.reasoning.cot", &[])
    } else {
        templates.render("prune.reasoning.direct", &[])
    };

    Ok(match strategy.mode {
        PruneMode::MultipleChoiceCui | PruneMode::MultipleChoiceIndex => {
            let listing = candidates
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{}) {}", i + 1, c.render()))
                .collect::<Vec<_>>()
                .join("\n");
            let instruction = if strategy.mode == PruneMode::MultipleChoiceCui {
                templates.render("prune.answer.cui", &[])
            } else {
                templates.render("prune.answer.index", &[])
            };
            let user = templates.render(
                "prune.multiple_choice.user",
                &[
                    ("mention", mention_text),
                    ("context", context),
                    ("candidates", &listing),
                    ("answer_instruction", &instruction),
                    ("reasoning", &reasoning),
                ],
            );
            vec![PromptText {
                kind: PromptKind::PruneMultipleChoice,
                system,
                user,
            }]
        }
        PruneMode::Binary => {
            let instruction = templates.render("prune.answer.binary", &[]);
            candidates
                .iter()
                .map(|c| PromptText {
                    kind: PromptKind::PruneBinary,
                    system: system.clone(),
                    user: templates.render(
                        "prune.binary.user",
                        &[
                            ("mention", mention_text),
                            ("context", context),
                            ("candidate", &c.render()),
                            ("answer_instruction", &instruction),
                            ("reasoning", &reasoning),
                        ],
                    ),
                })
                .collect()
        }
    })
}

fn answer_region(text: &str, chain_of_thought: bool) -> Option<&str> {
    match ANSWER_SENTINEL.find_iter(text).last() {
        Some(m) => Some(&text[m.end()..]),
        None if chain_of_thought => None,
        None => Some(text),
    }
}

/// Indices (0-based, ascending) of the accepted candidates. In binary mode
/// `candidates` is the single candidate the response is about.
pub fn parse_prune_response(
    text: &str,
    strategy: &PruneStrategy,
    candidates: &[PresentedConcept],
) -> std::result::Result<Vec<usize>, ParseFailure> {
    let region = answer_region(text, strategy.chain_of_thought).ok_or(ParseFailure)?;
    let explicit_none = || NONE.is_match(region);

    match strategy.mode {
        PruneMode::MultipleChoiceIndex => {
            let picked: BTreeSet<usize> = INTEGER
                .find_iter(region)
                .filter_map(|m| m.as_str().parse::<usize>().ok())
                .filter(|&i| (1..=candidates.len()).contains(&i))
                .map(|i| i - 1)
                .collect();
            if picked.is_empty() && !explicit_none() {
                return Err(ParseFailure);
            }
            Ok(picked.into_iter().collect())
        }
        PruneMode::MultipleChoiceCui => {
            let named: BTreeSet<&str> = CUI.find_iter(region).map(|m| m.as_str()).collect();
            let picked: Vec<usize> = candidates
                .iter()
                .enumerate()
                .filter(|(_, c)| named.contains(c.cui.as_str()))
                .map(|(i, _)| i)
                .collect();
            if picked.is_empty() && !explicit_none() {
                return Err(ParseFailure);
            }
            Ok(picked)
        }
        PruneMode::Binary => {
            let verdict = YES_NO.captures(region).ok_or(ParseFailure)?;
            if verdict[1].eq_ignore_ascii_case("yes") {
                Ok((0..candidates.len()).collect())
            } else {
                Ok(Vec::new())
            }
        }
    }
}

/// Assembles a verdict from per-candidate keep flags, applying Top1.
fn assemble(
    candidates: &[PresentedConcept],
    keep: &[bool],
    raw_responses: Vec<String>,
    parse_failures: usize,
    top1: bool,
) -> PruneVerdict {
    let mut keep = keep.to_vec();
    let mut top1_applied = false;
    if top1 && !candidates.is_empty() && !keep.iter().any(|&k| k) {
        keep[0] = true;
        top1_applied = true;
    }
    let (accepted, rejected) = candidates
        .iter()
        .zip(&keep)
        .fold((Vec::new(), Vec::new()), |(mut a, mut r), (c, &k)| {
            if k {
                a.push(c.cui.clone());
            } else {
                r.push(c.cui.clone());
            }
            (a, r)
        });
    PruneVerdict {
        accepted,
        rejected,
        raw_responses,
        parse_failures,
        top1_applied,
    }
}

/// Verdict for raw responses already obtained for `candidates`.
pub fn verdict_from_responses(
    responses: &[String],
    strategy: &PruneStrategy,
    candidates: &[PresentedConcept],
) -> PruneVerdict {
    let mut keep = vec![false; candidates.len()];
    let mut failures = 0;
    match strategy.mode {
        PruneMode::Binary => {
            for (i, text) in responses.iter().enumerate().take(candidates.len()) {
                match parse_prune_response(text, strategy, std::slice::from_ref(&candidates[i])) {
                    Ok(acc) => keep[i] = !acc.is_empty(),
                    Err(ParseFailure) => {
                        keep[i] = true;
                        failures += 1;
                    }
                }
            }
        }
        _ => match responses.first().map(|t| parse_prune_response(t, strategy, candidates)) {
            Some(Ok(acc)) => acc.into_iter().for_each(|i| keep[i] = true),
            Some(Err(ParseFailure)) | None => {
                keep.iter_mut().for_each(|k| *k = true);
                failures += 1;
            }
        },
    }
    assemble(candidates, &keep, responses.to_vec(), failures, strategy.top1)
}

/// Issues the pruning prompt(s) and returns the verdict. Binary prompts are
/// sent concurrently; the verdict does not depend on completion order.
pub fn prune_candidates(
    client: &LlmClient,
    templates: &PromptTemplates,
    mention_text: &str,
    context: &str,
    candidates: &[PresentedConcept],
    strategy: &PruneStrategy,
) -> std::result::Result<PruneVerdict, PruneError> {
    let prompts = build_prune_prompt(templates, mention_text, context, candidates, strategy)?;
    let replies = par::map_ordered(&prompts, |p| {
        client
            .complete(&client.request(p.kind, p.system.clone(), p.user.clone()))
            .map(|r| r.text)
    });
    let responses = replies.into_iter().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(verdict_from_responses(&responses, strategy, candidates))
}

#[derive(Debug, Error)]
pub enum PruneError {
    #[error(transparent)]
    Input(#[from] Error),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

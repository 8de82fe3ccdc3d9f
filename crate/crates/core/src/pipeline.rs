//! Per-mention orchestration: match the span, optionally match LLM
//! alternates too, merge and rank, optionally prune.
//!
//! LLM failures never abort a mention. A failed augmentation falls back to
//! the original span's candidates and a failed pruning call keeps the
//! ranked list; both mark the prediction `degraded` and record the error.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::augmenter::{generate_alternates, AlternateSet};
use crate::error::{Error, Result};
use crate::evaluator::{char_slice, Corpus};
use crate::llm::{ClientStats, LlmClient};
use crate::matchers::{rank_order, Candidate, MatcherId, MatcherIndex, MatcherSpec};
use crate::ontology::{ConceptDictionary, ConceptId};
use crate::par;
use crate::prompts::PromptTemplates;
use crate::pruner::{prune_candidates, PresentedConcept, PruneStrategy, PruneVerdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub doc_id: String,
    /// Character offsets into the document text.
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub context: String,
}

/// How scores for the same CUI from different query variants combine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeRule {
    #[default]
    Max,
    Sum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub matcher: MatcherSpec,
    pub augment: bool,
    pub k_alternates: usize,
    pub prune: Option<PruneStrategy>,
    pub context_window: usize,
    pub max_candidates_for_prune: usize,
    pub merge: MergeRule,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            matcher: MatcherSpec::Bm25(Default::default()),
            augment: false,
            k_alternates: 5,
            prune: None,
            context_window: 200,
            max_candidates_for_prune: 10,
            merge: MergeRule::Max,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.augment && self.k_alternates == 0 {
            return Err(Error::Config("k_alternates must be at least 1 when augmentation is on".into()));
        }
        if self.max_candidates_for_prune == 0 {
            return Err(Error::Config("max_candidates_for_prune must be positive".into()));
        }
        Ok(())
    }

    pub fn uses_llm(&self) -> bool {
        self.augment || self.prune.is_some()
    }
}

/// One line of the predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub final_cuis: Vec<ConceptId>,
    /// Full merged, ranked list before truncation and pruning.
    pub candidates: Vec<Candidate>,
    pub alternates: Option<AlternateSet>,
    pub prune: Option<PruneRecord>,
    pub degraded: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneRecord {
    pub strategy: PruneStrategy,
    pub accepted: Vec<ConceptId>,
    pub rejected: Vec<ConceptId>,
    pub top1_applied: bool,
    pub parse_failures: usize,
    pub raw_responses: Vec<String>,
}

impl PruneRecord {
    fn new(strategy: PruneStrategy, v: PruneVerdict) -> Self {
        PruneRecord {
            strategy,
            accepted: v.accepted,
            rejected: v.rejected,
            top1_applied: v.top1_applied,
            parse_failures: v.parse_failures,
            raw_responses: v.raw_responses,
        }
    }
}

impl Prediction {
    pub fn mention(&self) -> Mention {
        Mention {
            doc_id: self.doc_id.clone(),
            start: self.start,
            end: self.end,
            text: self.text.clone(),
            context: String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub mentions: usize,
    pub degraded: usize,
    pub llm_calls: usize,
    pub cache_hits: usize,
    pub llm_errors: usize,
}

/// Built indices plus everything a mention needs. Read-only after
/// construction, shared across worker threads.
pub struct Pipeline<'a> {
    dict: &'a ConceptDictionary,
    index: MatcherIndex,
    client: Option<LlmClient>,
    templates: PromptTemplates,
    cfg: PipelineConfig,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        dict: &'a ConceptDictionary,
        cfg: PipelineConfig,
        client: Option<LlmClient>,
        templates: PromptTemplates,
    ) -> Result<Self> {
        cfg.validate()?;
        if cfg.uses_llm() && client.is_none() {
            return Err(Error::Config("augmentation or pruning is enabled but no LLM backend is configured".into()));
        }
        let index = MatcherIndex::build(dict, &cfg.matcher)?;
        Ok(Pipeline {
            dict,
            index,
            client,
            templates,
            cfg,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn index(&self) -> &MatcherIndex {
        &self.index
    }

    fn query(&self, text: &str) -> Result<Vec<Candidate>> {
        self.index.query(text)
    }

    /// Merges per-CUI across query variants. Earlier lists win provenance
    /// ties, so the original span beats its alternates.
    fn merge(&self, lists: Vec<Vec<Candidate>>) -> Vec<Candidate> {
        let mut merged: Vec<Candidate> = Vec::new();
        let mut slot: HashMap<ConceptId, usize> = HashMap::new();
        for cand in lists.into_iter().flatten() {
            match slot.get(&cand.cui) {
                None => {
                    slot.insert(cand.cui.clone(), merged.len());
                    merged.push(cand);
                }
                Some(&i) => match self.cfg.merge {
                    MergeRule::Max => {
                        if cand.score > merged[i].score {
                            merged[i] = cand;
                        }
                    }
                    MergeRule::Sum => merged[i].score += cand.score,
                },
            }
        }
        merged.sort_by(rank_order);
        merged
    }

    pub fn normalize_mention(&self, mention: &Mention) -> Prediction {
        let mut errors = Vec::new();
        let mut degraded = false;

        let mut lists = Vec::new();
        match self.query(&mention.text) {
            Ok(c) => lists.push(c),
            Err(e) => errors.push(format!("matcher: {e}")),
        }

        let mut alternates = None;
        if self.cfg.augment {
            let client = self.client.as_ref().expect("checked in Pipeline::new");
            match generate_alternates(client, &self.templates, &mention.text, &mention.context, self.cfg.k_alternates) {
                Ok(set) => {
                    for alt in &set.alternates {
                        match self.query(alt) {
                            Ok(c) => lists.push(c),
                            Err(e) => errors.push(format!("matcher on alternate {alt:?}: {e}")),
                        }
                    }
                    alternates = Some(set);
                }
                Err(e) => {
                    degraded = true;
                    errors.push(format!("augment: {e}"));
                }
            }
        }

        let candidates = self.merge(lists);
        let shortlist = &candidates[..candidates.len().min(self.cfg.max_candidates_for_prune)];
        let mut final_cuis: Vec<ConceptId> = shortlist.iter().map(|c| c.cui.clone()).collect();

        let mut prune = None;
        if let (Some(strategy), false) = (self.cfg.prune, shortlist.is_empty()) {
            let client = self.client.as_ref().expect("checked in Pipeline::new");
            let presented: Vec<PresentedConcept> = shortlist
                .iter()
                .map(|c| PresentedConcept::lookup(self.dict, &c.cui, &c.matched_term))
                .collect();
            match prune_candidates(client, &self.templates, &mention.text, &mention.context, &presented, &strategy) {
                Ok(verdict) => {
                    final_cuis = verdict.accepted.clone();
                    prune = Some(PruneRecord::new(strategy, verdict));
                }
                Err(e) => {
                    degraded = true;
                    errors.push(format!("prune: {e}"));
                }
            }
        }

        Prediction {
            doc_id: mention.doc_id.clone(),
            start: mention.start,
            end: mention.end,
            text: mention.text.clone(),
            final_cuis,
            candidates,
            alternates,
            prune,
            degraded,
            errors,
        }
    }

    /// One prediction per mention, in input order, on up to `threads`
    /// workers.
    pub fn normalize_corpus(&self, mentions: &[Mention], threads: usize) -> (Vec<Prediction>, RunSummary) {
        let before = self.client.as_ref().map(LlmClient::stats).unwrap_or_default();
        let done = AtomicUsize::new(0);
        let total = mentions.len();
        let predictions = par::with_threads(threads, || {
            par::map_ordered(mentions, |m| {
                let p = self.normalize_mention(m);
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if n.is_multiple_of(500) || n == total {
                    log::info!("normalized {n}/{total} mentions");
                }
                p
            })
        });
        let after = self.client.as_ref().map(LlmClient::stats).unwrap_or_default();
        let delta = |f: fn(&ClientStats) -> usize| f(&after) - f(&before);
        let summary = RunSummary {
            mentions: predictions.len(),
            degraded: predictions.iter().filter(|p| p.degraded).count(),
            llm_calls: delta(|s| s.calls),
            cache_hits: delta(|s| s.cache_hits),
            llm_errors: delta(|s| s.errors),
        };
        (predictions, summary)
    }
}

/// Mentions for every distinct annotated span, in corpus order, with a
/// context window of `window` characters either side (clipped).
pub fn mentions_from_corpus(corpus: &Corpus, window: usize, semantic_filter: Option<&BTreeSet<String>>) -> Vec<Mention> {
    let docs: HashMap<&str, &str> = corpus.documents.iter().map(|d| (d.doc_id.as_str(), d.text.as_str())).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for ann in corpus.filtered_annotations(semantic_filter) {
        if !seen.insert((ann.doc_id.as_str(), ann.start, ann.end)) {
            continue;
        }
        let context = docs
            .get(ann.doc_id.as_str())
            .and_then(|text| {
                let len = text.chars().count();
                char_slice(text, ann.start.saturating_sub(window), (ann.end + window).min(len))
            })
            .unwrap_or("")
            .to_string();
        out.push(Mention {
            doc_id: ann.doc_id.clone(),
            start: ann.start,
            end: ann.end,
            text: ann.text.clone(),
            context,
        });
    }
    out
}

pub fn write_predictions(path: impl AsRef<Path>, predictions: &[Prediction]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for p in predictions {
        serde_json::to_writer(&mut out, p).map_err(|e| Error::json("serializing prediction", e))?;
        out.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

/// Every final CUI appears among the candidates with its query text and
/// matcher.
pub fn audit_trail(p: &Prediction) -> Vec<(&ConceptId, &str, MatcherId)> {
    p.final_cuis
        .iter()
        .filter_map(|cui| {
            p.candidates
                .iter()
                .find(|c| &c.cui == cui)
                .map(|c| (cui, c.query_text.as_str(), c.matcher_id))
        })
        .collect()
}

//! Approximate dictionary matching over character n-gram sets.
//!
//! Similarity is set-Jaccard. Retrieval follows CPMerge: for a query with
//! gram set X and threshold a, only terms of size |Y| in
//! [a|X|, |X|/a] can qualify, each needing an overlap of at least
//! ceil(a(|X|+|Y|)/(1+a)). Candidates are generated from the |X|-t+1 rarest
//! query grams and the rest are verified by binary search over posting
//! lists, dropping a candidate as soon as it can no longer reach t.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::ontology::{ConceptDictionary, ConceptId};

use super::text::{char_ngrams, normalize_text};
use super::{rank_order, Candidate, MatcherId};

/// Absorbs rounding in the size and overlap bounds so the filters never
/// reject a term the exact Jaccard test would accept.
const BOUND_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct NgramParams {
    pub n: usize,
    /// Minimum Jaccard similarity, in (0, 1].
    pub threshold: f64,
    pub top_k: usize,
}

impl Default for NgramParams {
    fn default() -> Self {
        NgramParams {
            n: 3,
            threshold: 0.7,
            top_k: 5,
        }
    }
}

impl NgramParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("ngram n must be >= 2, got {}", self.n)));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Config(format!("ngram threshold must be in (0,1], got {}", self.threshold)));
        }
        if self.top_k == 0 {
            return Err(Error::Config("ngram top_k must be positive".into()));
        }
        Ok(())
    }
}

fn gram_set(s: &str, n: usize) -> BTreeSet<String> {
    char_ngrams(s, n).into_iter().collect()
}

/// Jaccard coefficient of the two strings' n-gram sets; 0 when both are
/// empty.
pub fn ngram_similarity(a: &str, b: &str, n: usize) -> f64 {
    let ga = gram_set(a, n);
    let gb = gram_set(b, n);
    let inter = ga.intersection(&gb).count();
    let union = ga.len() + gb.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone)]
struct IndexedTerm {
    /// (owner, verbatim term) for every concept with this normalized term.
    owners: Vec<(ConceptId, String)>,
}

#[derive(Debug, Clone)]
pub struct NgramIndex {
    params: NgramParams,
    fingerprint: String,
    terms: Vec<IndexedTerm>,
    /// gram-set size -> gram -> term ids (ascending).
    by_size: BTreeMap<usize, HashMap<String, Vec<u32>>>,
}

impl NgramIndex {
    /// Indexes every term (preferred and synonyms) of the dictionary.
    pub fn build(dict: &ConceptDictionary, params: NgramParams) -> Result<Self> {
        params.validate()?;
        if dict.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        let mut by_norm: BTreeMap<String, Vec<(ConceptId, String)>> = BTreeMap::new();
        for concept in dict.iter() {
            for term in concept.terms() {
                let norm = normalize_text(term);
                if norm.is_empty() {
                    continue;
                }
                by_norm.entry(norm).or_default().push((concept.cui.clone(), term.to_string()));
            }
        }

        let mut terms = Vec::with_capacity(by_norm.len());
        let mut by_size: BTreeMap<usize, HashMap<String, Vec<u32>>> = BTreeMap::new();
        for (id, (norm, owners)) in by_norm.into_iter().enumerate() {
            let grams = gram_set(&norm, params.n);
            let bucket = by_size.entry(grams.len()).or_default();
            for g in grams {
                bucket.entry(g).or_default().push(id as u32);
            }
            terms.push(IndexedTerm { owners });
        }

        Ok(NgramIndex {
            params,
            fingerprint: dict.fingerprint(),
            terms,
            by_size,
        })
    }

    pub fn params(&self) -> &NgramParams {
        &self.params
    }

    pub fn dictionary_fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Normalized-term ids with Jaccard >= threshold, paired with the
    /// similarity.
    fn similar_terms(&self, query_grams: &[String], threshold: f64) -> Vec<(u32, f64)> {
        let qn = query_grams.len();
        let min_size = ((threshold * qn as f64) - BOUND_EPS).ceil().max(1.0) as usize;
        let max_size = ((qn as f64 / threshold) + BOUND_EPS).floor() as usize;
        let mut hits = Vec::new();

        for (&size, postings) in self.by_size.range(min_size..=max_size) {
            let tau = ((threshold * (qn + size) as f64 / (1.0 + threshold)) - BOUND_EPS).ceil().max(1.0) as usize;
            if tau > qn.min(size) {
                continue;
            }
            let empty: &[u32] = &[];
            let mut lists: Vec<&[u32]> = query_grams
                .iter()
                .map(|g| postings.get(g).map(Vec::as_slice).unwrap_or(empty))
                .collect();
            lists.sort_by_key(|l| l.len());

            let signature = qn - tau + 1;
            let mut counts: HashMap<u32, usize> = HashMap::new();
            for list in &lists[..signature] {
                for &id in *list {
                    *counts.entry(id).or_insert(0) += 1;
                }
            }
            for (i, list) in lists.iter().enumerate().skip(signature) {
                let remaining_after = qn - i - 1;
                counts.retain(|id, c| {
                    if list.binary_search(id).is_ok() {
                        *c += 1;
                    }
                    *c + remaining_after >= tau
                });
                if counts.is_empty() {
                    break;
                }
            }
            for (id, overlap) in counts {
                if overlap < tau {
                    continue;
                }
                let sim = overlap as f64 / (qn + size - overlap) as f64;
                if sim >= threshold {
                    hits.push((id, sim));
                }
            }
        }
        hits
    }

    /// Concepts owning a term with similarity >= `params.threshold`, scored
    /// by their best term, ranked, at most `params.top_k`.
    pub fn query(&self, text: &str, params: &NgramParams) -> Result<Vec<Candidate>> {
        let normalized = normalize_text(text);
        if normalized.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let grams: Vec<String> = gram_set(&normalized, self.params.n).into_iter().collect();

        let mut best: BTreeMap<&ConceptId, (f64, &str)> = BTreeMap::new();
        for (term_id, sim) in self.similar_terms(&grams, params.threshold) {
            for (cui, verbatim) in &self.terms[term_id as usize].owners {
                let slot = best.entry(cui).or_insert((sim, verbatim.as_str()));
                if sim > slot.0 || (sim == slot.0 && verbatim.as_str() < slot.1) {
                    *slot = (sim, verbatim.as_str());
                }
            }
        }
        let mut out: Vec<Candidate> = best
            .into_iter()
            .map(|(cui, (score, term))| Candidate {
                cui: cui.clone(),
                score,
                matched_term: term.to_string(),
                query_text: text.to_string(),
                matcher_id: MatcherId::Ngram,
            })
            .collect();
        out.sort_by(rank_order);
        out.truncate(params.top_k);
        Ok(out)
    }
}

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::ontology::{ConceptDictionary, ConceptId};

use super::text::normalize_text;
use super::{Candidate, MatcherId};

/// Normalized term -> owning concepts. Dictionary lookup only: no POS
/// tagging, no abbreviation tables.
#[derive(Debug, Clone)]
pub struct ExactIndex {
    fingerprint: String,
    /// Owners sorted by CUI, one entry per concept.
    terms: HashMap<String, Vec<(ConceptId, String)>>,
}

impl ExactIndex {
    pub fn build(dict: &ConceptDictionary) -> Result<Self> {
        if dict.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        let mut grouped: HashMap<String, BTreeMap<ConceptId, String>> = HashMap::new();
        for concept in dict.iter() {
            for term in concept.terms() {
                let norm = normalize_text(term);
                if norm.is_empty() {
                    continue;
                }
                // First term seen per concept wins, preferred term first.
                grouped
                    .entry(norm)
                    .or_default()
                    .entry(concept.cui.clone())
                    .or_insert_with(|| term.to_string());
            }
        }
        let terms = grouped.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect();
        Ok(ExactIndex {
            fingerprint: dict.fingerprint(),
            terms,
        })
    }

    pub fn dictionary_fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// All concepts with a term equal to `text` after normalization, score
    /// 1.0, CUI order. A miss is an empty list.
    pub fn lookup(&self, text: &str) -> Vec<Candidate> {
        let Some(owners) = self.terms.get(&normalize_text(text)) else {
            return Vec::new();
        };
        owners
            .iter()
            .map(|(cui, term)| Candidate {
                cui: cui.clone(),
                score: 1.0,
                matched_term: term.clone(),
                query_text: text.to_string(),
                matcher_id: MatcherId::Exact,
            })
            .collect()
    }
}

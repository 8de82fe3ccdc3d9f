use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ontology::{ConceptDictionary, ConceptId};

use super::text::{normalize_text, tokenize};
use super::{rank_order, Candidate, MatcherId};

#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Params {
    /// Term-frequency saturation.
    pub k1: f64,
    /// Length normalization, 0 disables it.
    pub b: f64,
    pub top_k: usize,
    /// Append synonyms to each concept's document. Off indexes preferred
    /// terms only.
    pub index_synonyms: bool,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params {
            k1: 1.2,
            b: 0.75,
            top_k: 5,
            index_synonyms: false,
        }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(Error::Config(format!("bm25 k1 must be positive, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Config(format!("bm25 b must be in [0,1], got {}", self.b)));
        }
        if self.top_k == 0 {
            return Err(Error::Config("bm25 top_k must be positive".into()));
        }
        Ok(())
    }
}

/// Inverted index with one document per concept.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    params: Bm25Params,
    fingerprint: String,
    doc_cuis: Vec<ConceptId>,
    /// Verbatim preferred term, reported as the matched term.
    doc_terms: Vec<String>,
    doc_lens: Vec<usize>,
    avgdl: f64,
    /// token -> (doc, term frequency), doc ascending.
    postings: HashMap<String, Vec<(u32, u32)>>,
}

impl Bm25Index {
    pub fn build(dict: &ConceptDictionary, params: Bm25Params) -> Result<Self> {
        params.validate()?;
        if dict.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        let mut doc_cuis = Vec::with_capacity(dict.loaded_count());
        let mut doc_terms = Vec::with_capacity(dict.loaded_count());
        let mut doc_lens = Vec::with_capacity(dict.loaded_count());
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();

        for (doc, concept) in dict.iter().enumerate() {
            let mut text = normalize_text(&concept.preferred_term);
            if params.index_synonyms {
                for syn in &concept.synonyms {
                    text.push(' ');
                    text.push_str(&normalize_text(syn));
                }
            }
            let tokens = tokenize(&text);
            let mut tf: HashMap<&str, u32> = HashMap::new();
            for t in &tokens {
                *tf.entry(t).or_insert(0) += 1;
            }
            for (t, f) in tf {
                postings.entry(t.to_string()).or_default().push((doc as u32, f));
            }
            doc_cuis.push(concept.cui.clone());
            doc_terms.push(concept.preferred_term.clone());
            doc_lens.push(tokens.len());
        }
        for list in postings.values_mut() {
            list.sort_unstable();
        }
        let avgdl = doc_lens.iter().sum::<usize>() as f64 / doc_lens.len() as f64;

        Ok(Bm25Index {
            params,
            fingerprint: dict.fingerprint(),
            doc_cuis,
            doc_terms,
            doc_lens,
            avgdl,
            postings,
        })
    }

    pub fn params(&self) -> &Bm25Params {
        &self.params
    }

    pub fn dictionary_fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn doc_count(&self) -> usize {
        self.doc_cuis.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    /// CUIs of the documents containing `token`, with term frequencies.
    pub fn postings(&self, token: &str) -> Vec<(&ConceptId, u32)> {
        self.postings
            .get(token)
            .map(|list| list.iter().map(|&(d, f)| (&self.doc_cuis[d as usize], f)).collect())
            .unwrap_or_default()
    }

    fn idf(&self, doc_freq: usize) -> f64 {
        let n = self.doc_cuis.len() as f64;
        let nq = doc_freq as f64;
        (1.0 + (n - nq + 0.5) / (nq + 0.5)).ln()
    }

    /// Ranked candidates with positive score, at most `top_k`. Repeated
    /// query tokens contribute once per occurrence.
    pub fn query(&self, text: &str, top_k: usize) -> Result<Vec<Candidate>> {
        let normalized = normalize_text(text);
        let tokens = tokenize(&normalized);
        if tokens.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let Bm25Params { k1, b, .. } = self.params;
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for token in tokens {
            let Some(list) = self.postings.get(token) else { continue };
            let idf = self.idf(list.len());
            for &(doc, tf) in list {
                let tf = tf as f64;
                let dl = self.doc_lens[doc as usize] as f64;
                let contribution = idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / self.avgdl));
                *scores.entry(doc).or_insert(0.0) += contribution;
            }
        }
        let mut out: Vec<Candidate> = scores
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(doc, score)| Candidate {
                cui: self.doc_cuis[doc as usize].clone(),
                score,
                matched_term: self.doc_terms[doc as usize].clone(),
                query_text: text.to_string(),
                matcher_id: MatcherId::Bm25,
            })
            .collect();
        out.sort_by(rank_order);
        out.truncate(top_k);
        Ok(out)
    }
}

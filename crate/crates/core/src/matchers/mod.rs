//! Candidate generation. Three interchangeable engines over the same
//! dictionary: Okapi BM25 over preferred terms, character n-gram Jaccard
//! over all terms, and normalized exact lookup.

mod bm25;
mod exact;
mod ngram;
mod text;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{ConceptDictionary, ConceptId};

pub use bm25::{Bm25Index, Bm25Params};
pub use exact::ExactIndex;
pub use ngram::{ngram_similarity, NgramIndex, NgramParams};
pub use text::{char_ngrams, normalize_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatcherId {
    #[serde(rename = "BM25", alias = "bm25")]
    Bm25,
    #[serde(rename = "NGRAM", alias = "ngram")]
    Ngram,
    #[serde(rename = "EXACT", alias = "exact")]
    Exact,
}

impl MatcherId {
    pub fn as_str(self) -> &'static str {
        match self {
            MatcherId::Bm25 => "BM25",
            MatcherId::Ngram => "NGRAM",
            MatcherId::Exact => "EXACT",
        }
    }
}

impl fmt::Display for MatcherId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatcherId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bm25" => Ok(MatcherId::Bm25),
            "ngram" => Ok(MatcherId::Ngram),
            "exact" => Ok(MatcherId::Exact),
            other => Err(Error::Config(format!("unknown matcher {other:?} (expected bm25, ngram or exact)"))),
        }
    }
}

/// One matcher hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub cui: ConceptId,
    pub score: f64,
    /// Dictionary term (verbatim) that produced the hit.
    pub matched_term: String,
    /// The span or alternate phrasing that was queried.
    pub query_text: String,
    pub matcher_id: MatcherId,
}

/// Score descending, then CUI ascending.
pub fn rank_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.cui.cmp(&b.cui))
}

/// A built index for one of the three engines.
#[derive(Debug, Clone)]
pub enum MatcherIndex {
    Bm25(Bm25Index),
    Ngram(NgramIndex),
    Exact(ExactIndex),
}

/// Which engine to build, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum MatcherSpec {
    Bm25(Bm25Params),
    Ngram(NgramParams),
    Exact,
}

impl MatcherIndex {
    pub fn build(dict: &ConceptDictionary, spec: &MatcherSpec) -> Result<Self> {
        Ok(match spec {
            MatcherSpec::Bm25(p) => MatcherIndex::Bm25(Bm25Index::build(dict, p.clone())?),
            MatcherSpec::Ngram(p) => MatcherIndex::Ngram(NgramIndex::build(dict, p.clone())?),
            MatcherSpec::Exact => MatcherIndex::Exact(ExactIndex::build(dict)?),
        })
    }

    pub fn id(&self) -> MatcherId {
        match self {
            MatcherIndex::Bm25(_) => MatcherId::Bm25,
            MatcherIndex::Ngram(_) => MatcherId::Ngram,
            MatcherIndex::Exact(_) => MatcherId::Exact,
        }
    }

    pub fn dictionary_fingerprint(&self) -> &str {
        match self {
            MatcherIndex::Bm25(i) => i.dictionary_fingerprint(),
            MatcherIndex::Ngram(i) => i.dictionary_fingerprint(),
            MatcherIndex::Exact(i) => i.dictionary_fingerprint(),
        }
    }

    /// Queries with the parameters the index was built with.
    pub fn query(&self, text: &str) -> Result<Vec<Candidate>> {
        match self {
            MatcherIndex::Bm25(i) => i.query(text, i.params().top_k),
            MatcherIndex::Ngram(i) => i.query(text, i.params()),
            MatcherIndex::Exact(i) => Ok(i.lookup(text)),
        }
    }
}

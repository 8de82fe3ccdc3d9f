//! Concept dictionary: loading, validation and semantic-type filtering.
//!
//! The on-disk format is a four-column TSV, one term per line:
//!
//! ```text
//! CUI<TAB>term<TAB>is_preferred<TAB>semantic_types
//! ```
//!
//! `is_preferred` is `0` or `1` and every CUI needs exactly one preferred
//! row. `semantic_types` is a comma-separated list of type codes such as
//! `T047`. Lines starting with `#` are comments. Several rows for the same
//! CUI are merged, so line order never affects the loaded dictionary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A UMLS-style concept identifier: `C` followed by seven digits.
///
/// Parsing accepts an optional `UMLS:` prefix; the canonical form never
/// carries it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ConceptId(String);

impl ConceptId {
    pub fn parse(raw: &str) -> Result<Self> {
        let s = raw.trim();
        let s = s.strip_prefix("UMLS:").unwrap_or(s);
        let bytes = s.as_bytes();
        let valid = bytes.len() == 8 && bytes[0] == b'C' && bytes[1..].iter().all(u8::is_ascii_digit);
        if valid {
            Ok(ConceptId(s.to_string()))
        } else {
            Err(Error::InvalidCui(raw.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ConceptId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConceptId::parse(s)
    }
}

impl TryFrom<String> for ConceptId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        ConceptId::parse(&s)
    }
}

impl From<ConceptId> for String {
    fn from(id: ConceptId) -> String {
        id.0
    }
}

/// One ontology entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub cui: ConceptId,
    pub preferred_term: String,
    /// Never contains `preferred_term`.
    pub synonyms: BTreeSet<String>,
    pub semantic_types: BTreeSet<String>,
}

impl Concept {
    /// Preferred term first, then synonyms in sorted order.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.preferred_term.as_str()).chain(self.synonyms.iter().map(String::as_str))
    }

    pub fn has_term(&self, term: &str) -> bool {
        self.preferred_term == term || self.synonyms.contains(term)
    }
}

/// The loaded concept dictionary. Immutable once built.
///
/// Equality compares the concept map only; two dictionaries loaded from
/// different paths with the same content are equal.
#[derive(Debug, Clone, Default)]
pub struct ConceptDictionary {
    concepts: BTreeMap<ConceptId, Concept>,
    source_path: String,
}

impl PartialEq for ConceptDictionary {
    fn eq(&self, other: &Self) -> bool {
        self.concepts == other.concepts
    }
}

impl Eq for ConceptDictionary {}

/// Summary counts reported by `dict-stats`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DictionaryStats {
    pub concept_count: usize,
    /// Preferred terms plus synonyms.
    pub term_count: usize,
    /// Number of concepts carrying each semantic type.
    pub semantic_type_histogram: BTreeMap<String, usize>,
}

#[derive(Default)]
struct PartialConcept {
    preferred: Option<String>,
    terms: BTreeSet<String>,
    semantic_types: BTreeSet<String>,
}

impl ConceptDictionary {
    pub fn from_concepts(concepts: impl IntoIterator<Item = Concept>, source_path: impl Into<String>) -> Self {
        let mut map: BTreeMap<ConceptId, Concept> = BTreeMap::new();
        for mut c in concepts {
            c.synonyms.remove(&c.preferred_term);
            match map.get_mut(&c.cui) {
                Some(existing) => {
                    existing.synonyms.extend(c.synonyms);
                    existing.synonyms.remove(&existing.preferred_term);
                    existing.semantic_types.extend(c.semantic_types);
                }
                None => {
                    map.insert(c.cui.clone(), c);
                }
            }
        }
        ConceptDictionary {
            concepts: map,
            source_path: source_path.into(),
        }
    }

    /// Parses the dictionary TSV from an in-memory string.
    pub fn parse(text: &str, source_path: &str) -> Result<Self> {
        let mut partial: BTreeMap<ConceptId, PartialConcept> = BTreeMap::new();

        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |reason: String| Error::MalformedLine {
                path: source_path.to_string(),
                line: line_no,
                reason,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(malformed(format!("expected 4 tab-separated fields, found {}", fields.len())));
            }
            let cui = ConceptId::parse(fields[0]).map_err(|_| malformed(format!("invalid CUI {:?}", fields[0])))?;
            let term = fields[1];
            if term.trim().is_empty() {
                return Err(malformed("empty term".to_string()));
            }
            let is_preferred = match fields[2] {
                "1" => true,
                "0" => false,
                other => return Err(malformed(format!("is_preferred must be 0 or 1, found {other:?}"))),
            };
            let types: BTreeSet<String> = fields[3]
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect();
            if types.is_empty() {
                return Err(malformed("no semantic types".to_string()));
            }

            let entry = partial.entry(cui.clone()).or_default();
            if is_preferred {
                match &entry.preferred {
                    Some(existing) if existing != term => {
                        return Err(malformed(format!(
                            "second preferred term {term:?} for {cui} (already {existing:?})"
                        )));
                    }
                    _ => entry.preferred = Some(term.to_string()),
                }
            }
            entry.terms.insert(term.to_string());
            entry.semantic_types.extend(types);
        }

        let mut concepts = BTreeMap::new();
        for (cui, p) in partial {
            let Some(preferred_term) = p.preferred else {
                return Err(Error::MissingPreferred {
                    path: source_path.to_string(),
                    cui: cui.to_string(),
                });
            };
            let mut synonyms = p.terms;
            synonyms.remove(&preferred_term);
            concepts.insert(
                cui.clone(),
                Concept {
                    cui,
                    preferred_term,
                    synonyms,
                    semantic_types: p.semantic_types,
                },
            );
        }
        Ok(ConceptDictionary {
            concepts,
            source_path: source_path.to_string(),
        })
    }

    pub fn get(&self, cui: &ConceptId) -> Option<&Concept> {
        self.concepts.get(cui)
    }

    pub fn contains(&self, cui: &ConceptId) -> bool {
        self.concepts.contains_key(cui)
    }

    /// Concepts in CUI order.
    pub fn iter(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn loaded_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    /// Serializes back to the TSV format: preferred row first, then
    /// synonyms, concepts in CUI order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for c in self.concepts.values() {
            let types = c.semantic_types.iter().cloned().collect::<Vec<_>>().join(",");
            out.push_str(&format!("{}\t{}\t1\t{}\n", c.cui, c.preferred_term, types));
            for syn in &c.synonyms {
                out.push_str(&format!("{}\t{}\t0\t{}\n", c.cui, syn, types));
            }
        }
        out
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_tsv().as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Content hash identifying the dictionary an index was built from.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_tsv().as_bytes());
        hex::encode(&digest[..8])
    }
}

pub fn load_dictionary(path: impl AsRef<Path>) -> Result<ConceptDictionary> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ConceptDictionary::parse(&text, &path.display().to_string())
}

/// Keeps exactly the concepts whose semantic types intersect `allowed`.
pub fn filter_by_semantic_types(dict: &ConceptDictionary, allowed: &BTreeSet<String>) -> ConceptDictionary {
    let concepts = dict
        .concepts
        .iter()
        .filter(|(_, c)| c.semantic_types.iter().any(|t| allowed.contains(t)))
        .map(|(k, c)| (k.clone(), c.clone()))
        .collect();
    ConceptDictionary {
        concepts,
        source_path: dict.source_path.clone(),
    }
}

pub fn dictionary_stats(dict: &ConceptDictionary) -> DictionaryStats {
    let mut histogram = BTreeMap::new();
    let mut term_count = 0;
    for c in dict.iter() {
        term_count += 1 + c.synonyms.len();
        for t in &c.semantic_types {
            *histogram.entry(t.clone()).or_insert(0) += 1;
        }
    }
    DictionaryStats {
        concept_count: dict.loaded_count(),
        term_count,
        semantic_type_histogram: histogram,
    }
}

/// A starting point for "diseases and conditions": the UMLS Disorders
/// semantic group. This is a guess and should be reviewed against the
/// annotation scheme of the corpus in use.
pub const DEFAULT_DISORDER_TYPES: &[&str] = &[
    "T019", // Congenital Abnormality
    "T020", // Acquired Abnormality
    "T033", // Finding
    "T037", // Injury or Poisoning
    "T046", // Pathologic Function
    "T047", // Disease or Syndrome
    "T048", // Mental or Behavioral Dysfunction
    "T049", // Cell or Molecular Dysfunction
    "T050", // Experimental Model of Disease
    "T184", // Sign or Symptom
    "T190", // Anatomical Abnormality
    "T191", // Neoplastic Process
];

//! Gold corpus loading (PubTator) and micro-averaged scoring.
//!
//! Scoring is per gold mention: with gold CUI `g` and predicted set `P`, a
//! hit adds one true positive, a miss one false negative, and every other
//! CUI in `P` one false positive.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::ConceptId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub abstract_text: String,
    /// `title + "\n" + abstract`; offsets index characters of this string.
    pub text: String,
}

impl Document {
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    /// Characters `[start, end)`, or `None` when out of bounds.
    pub fn slice(&self, start: usize, end: usize) -> Option<&str> {
        char_slice(&self.text, start, end)
    }
}

pub(crate) fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut idx = s.char_indices().map(|(b, _)| b).chain(std::iter::once(s.len()));
    let b0 = idx.nth(start)?;
    let b1 = if end == start { b0 } else { idx.nth(end - start - 1)? };
    Some(&s[b0..b1])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub semantic_types: BTreeSet<String>,
    pub cui: ConceptId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub annotations: Vec<GoldAnnotation>,
    /// Mention lines skipped because their offsets fall outside the text.
    pub skipped_out_of_bounds: usize,
    /// Kept mentions whose text differs from the document at their offsets.
    pub text_mismatches: usize,
}

impl Corpus {
    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    /// Annotations whose semantic types intersect `allowed`; all of them
    /// when `allowed` is `None`.
    pub fn filtered_annotations(&self, allowed: Option<&BTreeSet<String>>) -> Vec<&GoldAnnotation> {
        self.annotations
            .iter()
            .filter(|a| allowed.is_none_or(|set| a.semantic_types.iter().any(|t| set.contains(t))))
            .collect()
    }
}

pub fn load_pubtator(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pubtator(&text, &path.display().to_string())
}

struct OpenDoc {
    doc_id: String,
    title: String,
    abstract_text: Option<String>,
    mentions: Vec<(usize, GoldAnnotation)>,
}

pub fn parse_pubtator(text: &str, origin: &str) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    let mut open: Option<OpenDoc> = None;

    let malformed = |line: usize, reason: String| Error::MalformedLine {
        path: origin.to_string(),
        line,
        reason,
    };

    let close = |doc: OpenDoc, corpus: &mut Corpus| {
        let abstract_text = doc.abstract_text.unwrap_or_default();
        let document = Document {
            text: format!("{}\n{}", doc.title, abstract_text),
            doc_id: doc.doc_id,
            title: doc.title,
            abstract_text,
        };
        let len = document.char_len();
        for (line, ann) in doc.mentions {
            if ann.end > len {
                log::warn!("{origin}:{line}: offsets [{}, {}) exceed document length {len}; skipped", ann.start, ann.end);
                corpus.skipped_out_of_bounds += 1;
                continue;
            }
            if document.slice(ann.start, ann.end) != Some(ann.text.as_str()) {
                log::warn!("{origin}:{line}: mention text {:?} does not match document text at its offsets", ann.text);
                corpus.text_mismatches += 1;
            }
            corpus.annotations.push(ann);
        }
        corpus.documents.push(document);
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if let Some(doc) = open.take() {
                close(doc, &mut corpus);
            }
            continue;
        }

        let head = line.split('\t').next().unwrap_or("");
        let mut pipe = head.splitn(3, '|');
        if let (Some(id), Some(tag @ ("t" | "a")), Some(_)) = (pipe.next(), pipe.next(), pipe.next()) {
            let body = &line[id.len() + 3..];
            if tag == "t" {
                if let Some(doc) = open.take() {
                    close(doc, &mut corpus);
                }
                open = Some(OpenDoc {
                    doc_id: id.to_string(),
                    title: body.to_string(),
                    abstract_text: None,
                    mentions: Vec::new(),
                });
            } else {
                match &mut open {
                    Some(doc) if doc.doc_id == id && doc.abstract_text.is_none() && doc.mentions.is_empty() => {
                        doc.abstract_text = Some(body.to_string());
                    }
                    _ => return Err(malformed(line_no, format!("abstract line for {id} does not follow its title line"))),
                }
            }
            continue;
        }

        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(malformed(
                line_no,
                format!("expected a title/abstract line or 6 tab-separated mention fields, found {}", fields.len()),
            ));
        }
        let Some(doc) = &mut open else {
            return Err(malformed(line_no, "mention line outside a document".into()));
        };
        if fields[0] != doc.doc_id {
            return Err(malformed(line_no, format!("mention for {} inside document {}", fields[0], doc.doc_id)));
        }
        let offset = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| malformed(line_no, format!("{what} offset {s:?} is not a non-negative integer")))
        };
        let start = offset(fields[1], "start")?;
        let end = offset(fields[2], "end")?;
        if end <= start {
            return Err(malformed(line_no, format!("end {end} is not after start {start}")));
        }
        let cui = ConceptId::parse(fields[5]).map_err(|_| malformed(line_no, format!("invalid CUI {:?}", fields[5])))?;
        let semantic_types = fields[4]
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect();
        doc.mentions.push((
            line_no,
            GoldAnnotation {
                doc_id: doc.doc_id.clone(),
                start,
                end,
                text: fields[3].to_string(),
                semantic_types,
                cui,
            },
        ));
    }
    if let Some(doc) = open.take() {
        close(doc, &mut corpus);
    }
    Ok(corpus)
}

/// `(1 + b^2) * p * r / (b^2 * p + r)`, 0 when both inputs are 0.
pub fn fbeta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * (precision * recall) / denom
    }
}

/// `2 * p * r / (p + r)`, 0 when both inputs are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * (precision * recall) / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub beta: f64,
    pub semantic_type_filter: Option<BTreeSet<String>>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            beta: 2.0,
            semantic_type_filter: None,
        }
    }
}

/// The fields of a predictions-file record the evaluator reads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub final_cuis: Vec<ConceptId>,
    /// 1-based line in the source file, 0 when built in memory.
    #[serde(skip)]
    pub line: usize,
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut rec: PredictionRecord =
            serde_json::from_str(line).map_err(|e| Error::json(format!("{}:{}", path.display(), i + 1), e))?;
        rec.line = i + 1;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f_beta: f64,
    pub beta: f64,
    pub n_mentions: usize,
    /// Gold mentions with no prediction record, scored as empty.
    pub missing_predictions: usize,
    /// Prediction records matching no gold mention, ignored.
    pub unmatched_predictions: usize,
    /// tp + fp was 0 and precision was set to 0.
    pub precision_undefined: bool,
    /// tp + fn was 0 and recall was set to 0.
    pub recall_undefined: bool,
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, beta: f64, n_mentions: usize) -> Self {
        let precision_undefined = tp + fp == 0;
        let recall_undefined = tp + fn_ == 0;
        let precision = if precision_undefined { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if recall_undefined { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        EvalReport {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1: f1(precision, recall),
            f_beta: fbeta(precision, recall, beta),
            beta,
            n_mentions,
            missing_predictions: 0,
            unmatched_predictions: 0,
            precision_undefined,
            recall_undefined,
        }
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mentions   {:>8}", self.n_mentions);
        let _ = writeln!(s, "TP         {:>8}", self.tp);
        let _ = writeln!(s, "FP         {:>8}", self.fp);
        let _ = writeln!(s, "FN         {:>8}", self.fn_);
        let _ = writeln!(s, "precision  {:>8.4}{}", self.precision, if self.precision_undefined { "  (undefined, 0 by convention)" } else { "" });
        let _ = writeln!(s, "recall     {:>8.4}{}", self.recall, if self.recall_undefined { "  (undefined, 0 by convention)" } else { "" });
        let _ = writeln!(s, "F1         {:>8.4}", self.f1);
        let _ = writeln!(s, "F{:<9} {:>8.4}", format!("{}", self.beta), self.f_beta);
        if self.missing_predictions > 0 {
            let _ = writeln!(s, "missing predictions: {}", self.missing_predictions);
        }
        if self.unmatched_predictions > 0 {
            let _ = writeln!(s, "unmatched predictions: {}", self.unmatched_predictions);
        }
        s
    }

    /// `P=... R=... F1=... Fβ=...` on one line.
    pub fn summary_line(&self) -> String {
        format!(
            "P={} R={} F1={} F{}={}",
            round4(self.precision),
            round4(self.recall),
            round4(self.f1),
            self.beta,
            round4(self.f_beta)
        )
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

type SpanKey<'a> = (&'a str, usize, usize);

pub fn score_predictions(predictions: &[PredictionRecord], gold: &[GoldAnnotation], cfg: &EvalConfig) -> Result<EvalReport> {
    // Written negated so NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(cfg.beta > 0.0) {
        return Err(Error::Config(format!("beta must be positive, got {}", cfg.beta)));
    }
    let mut by_span: HashMap<SpanKey<'_>, &PredictionRecord> = HashMap::new();
    for p in predictions {
        if by_span.insert((p.doc_id.as_str(), p.start, p.end), p).is_some() {
            return Err(Error::DuplicatePrediction {
                path: "predictions".into(),
                line: p.line,
                doc_id: p.doc_id.clone(),
                start: p.start,
                end: p.end,
            });
        }
    }

    let gold: Vec<&GoldAnnotation> = gold
        .iter()
        .filter(|g| {
            cfg.semantic_type_filter
                .as_ref()
                .is_none_or(|set| g.semantic_types.iter().any(|t| set.contains(t)))
        })
        .collect();

    let (mut tp, mut fp, mut fn_, mut missing) = (0, 0, 0, 0);
    let mut matched_spans: BTreeSet<SpanKey<'_>> = BTreeSet::new();
    for g in &gold {
        let key = (g.doc_id.as_str(), g.start, g.end);
        let predicted: BTreeSet<&ConceptId> = match by_span.get(&key) {
            Some(p) => {
                matched_spans.insert(key);
                p.final_cuis.iter().collect()
            }
            None => {
                missing += 1;
                BTreeSet::new()
            }
        };
        if predicted.contains(&g.cui) {
            tp += 1;
            fp += predicted.len() - 1;
        } else {
            fn_ += 1;
            fp += predicted.len();
        }
    }

    let mut report = EvalReport::from_counts(tp, fp, fn_, cfg.beta, gold.len());
    report.missing_predictions = missing;
    report.unmatched_predictions = by_span.len() - matched_spans.len();
    if missing > 0 {
        log::warn!("{missing} gold mentions have no prediction record; scored as empty");
    }
    Ok(report)
}

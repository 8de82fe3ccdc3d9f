//! LLM-augmented biomedical concept normalization.
//!
//! A mention is matched against a concept dictionary by one of three
//! baseline engines ([`matchers`]). Optionally an LLM first proposes
//! alternate phrasings that are matched too ([`augmenter`]), and the merged
//! candidate list is then filtered by a second LLM pass ([`pruner`]).
//! [`pipeline`] wires the stages together and [`evaluator`] scores the
//! resulting predictions against a PubTator gold corpus.

pub mod augmenter;
pub mod cli;
pub mod config;
pub mod error;
pub mod evaluator;
pub mod llm;
pub mod matchers;
pub mod ontology;
pub mod par;
pub mod pipeline;
pub mod prompts;
pub mod pruner;

pub use error::{Error, Result};

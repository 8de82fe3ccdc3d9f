//! Run configuration: a JSON file with one section per module. Every field
//! is optional; command-line flags overlay the file and built-in defaults
//! fill whatever is still unset.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::EvalConfig;
use crate::llm::{EndpointConfig, RequestSettings};
use crate::matchers::{Bm25Params, MatcherId, MatcherSpec, NgramParams};
use crate::pipeline::{MergeRule, PipelineConfig};
use crate::pruner::{PruneMode, PruneStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    /// HTTP chat-completions endpoint.
    Live,
    /// On-disk response cache in front of the live endpoint.
    Cache,
    /// Canned responses from a rules file; never touches the network.
    Mock,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub ontology: OntologySection,
    pub matchers: MatchersSection,
    pub llm_client: LlmSection,
    pub prompts: PromptsSection,
    pub augmenter: AugmenterSection,
    pub pruner: PrunerSection,
    pub pipeline: PipelineSection,
    pub evaluator: EvaluatorSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OntologySection {
    pub dictionary: Option<PathBuf>,
    /// Keep only concepts with at least one of these types.
    pub semantic_types: Option<BTreeSet<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchersSection {
    pub matcher: Option<MatcherId>,
    pub bm25: Bm25Section,
    pub ngram: NgramSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Section {
    pub k1: Option<f64>,
    pub b: Option<f64>,
    pub top_k: Option<usize>,
    pub index_synonyms: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NgramSection {
    pub n: Option<usize>,
    pub threshold: Option<f64>,
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    pub backend: Option<BackendChoice>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub base_url: Option<String>,
    pub api_key_env: Option<String>,
    pub timeout_secs: Option<f64>,
    pub max_retries: Option<u32>,
    pub retry_backoff_ms: Option<u64>,
    pub max_concurrent_requests: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub mock_rules: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptsSection {
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmenterSection {
    pub enabled: Option<bool>,
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrunerSection {
    pub enabled: Option<bool>,
    pub mode: Option<PruneMode>,
    pub chain_of_thought: Option<bool>,
    pub top1: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub context_window: Option<usize>,
    pub max_candidates_for_prune: Option<usize>,
    pub merge: Option<MergeRule>,
    /// Worker threads; defaults to `llm_client.max_concurrent_requests`.
    pub threads: Option<usize>,
    /// Degraded mentions tolerated before the run counts as an LLM failure.
    pub max_degraded: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluatorSection {
    pub corpus: Option<PathBuf>,
    pub beta: Option<f64>,
    /// Gold annotations (and the mentions normalized from them) are
    /// restricted to these types.
    pub semantic_types: Option<BTreeSet<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub predictions: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl RunConfig {
    /// Parses a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in cfg.paths_mut().into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    fn paths_mut(&mut self) -> [&mut Option<PathBuf>; 7] {
        [
            &mut self.ontology.dictionary,
            &mut self.llm_client.cache_dir,
            &mut self.llm_client.mock_rules,
            &mut self.prompts.templates,
            &mut self.evaluator.corpus,
            &mut self.output.predictions,
            &mut self.output.report,
        ]
    }

    pub fn matcher_spec(&self) -> Result<MatcherSpec> {
        let m = &self.matchers;
        Ok(match m.matcher.unwrap_or(MatcherId::Bm25) {
            MatcherId::Bm25 => {
                let d = Bm25Params::default();
                let p = Bm25Params {
                    k1: m.bm25.k1.unwrap_or(d.k1),
                    b: m.bm25.b.unwrap_or(d.b),
                    top_k: m.bm25.top_k.unwrap_or(d.top_k),
                    index_synonyms: m.bm25.index_synonyms.unwrap_or(d.index_synonyms),
                };
                p.validate()?;
                MatcherSpec::Bm25(p)
            }
            MatcherId::Ngram => {
                let d = NgramParams::default();
                let p = NgramParams {
                    n: m.ngram.n.unwrap_or(d.n),
                    threshold: m.ngram.threshold.unwrap_or(d.threshold),
                    top_k: m.ngram.top_k.unwrap_or(d.top_k),
                };
                p.validate()?;
                MatcherSpec::Ngram(p)
            }
            MatcherId::Exact => MatcherSpec::Exact,
        })
    }

    pub fn prune_strategy(&self) -> Option<PruneStrategy> {
        let p = &self.pruner;
        p.enabled.unwrap_or(false).then(|| PruneStrategy {
            mode: p.mode.unwrap_or(PruneMode::MultipleChoiceCui),
            chain_of_thought: p.chain_of_thought.unwrap_or(false),
            top1: p.top1.unwrap_or(true),
        })
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let d = PipelineConfig::default();
        let cfg = PipelineConfig {
            matcher: self.matcher_spec()?,
            augment: self.augmenter.enabled.unwrap_or(false),
            k_alternates: self.augmenter.k.unwrap_or(d.k_alternates),
            prune: self.prune_strategy(),
            context_window: self.pipeline.context_window.unwrap_or(d.context_window),
            max_candidates_for_prune: self.pipeline.max_candidates_for_prune.unwrap_or(d.max_candidates_for_prune),
            merge: self.pipeline.merge.unwrap_or(d.merge),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn backend(&self) -> BackendChoice {
        self.llm_client.backend.unwrap_or(BackendChoice::Cache)
    }

    pub fn request_settings(&self) -> Result<RequestSettings> {
        let d = RequestSettings::default();
        let l = &self.llm_client;
        let s = RequestSettings {
            model: l.model.clone().unwrap_or(d.model),
            temperature: l.temperature.unwrap_or(d.temperature),
            max_tokens: l.max_tokens.unwrap_or(d.max_tokens),
        };
        if !(0.0..=2.0).contains(&s.temperature) {
            return Err(Error::Config(format!("temperature must be within [0, 2], got {}", s.temperature)));
        }
        if s.max_tokens == 0 {
            return Err(Error::Config("max_tokens must be positive".into()));
        }
        Ok(s)
    }

    pub fn endpoint(&self) -> Result<EndpointConfig> {
        let d = EndpointConfig::default();
        let l = &self.llm_client;
        let timeout = match l.timeout_secs {
            Some(t) if !(t.is_finite() && t > 0.0) => {
                return Err(Error::Config(format!("timeout_secs must be positive, got {t}")))
            }
            Some(t) => Duration::from_secs_f64(t),
            None => d.timeout,
        };
        Ok(EndpointConfig {
            base_url: l.base_url.clone().unwrap_or(d.base_url),
            api_key_env: l.api_key_env.clone().unwrap_or(d.api_key_env),
            timeout,
            max_retries: l.max_retries.unwrap_or(d.max_retries),
            retry_backoff: l.retry_backoff_ms.map(Duration::from_millis).unwrap_or(d.retry_backoff),
            max_concurrent_requests: self.max_concurrent()?,
        })
    }

    pub fn max_concurrent(&self) -> Result<usize> {
        match self.llm_client.max_concurrent_requests {
            Some(0) => Err(Error::Config("max_concurrent_requests must be at least 1".into())),
            Some(n) => Ok(n),
            None => Ok(EndpointConfig::default().max_concurrent_requests),
        }
    }

    pub fn threads(&self) -> Result<usize> {
        match self.pipeline.threads {
            Some(0) => Err(Error::Config("threads must be at least 1".into())),
            Some(n) => Ok(n),
            None => self.max_concurrent(),
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.llm_client.cache_dir.clone().unwrap_or_else(|| PathBuf::from(".llmnorm-cache"))
    }

    pub fn eval_config(&self) -> Result<EvalConfig> {
        let beta = self.evaluator.beta.unwrap_or(EvalConfig::default().beta);
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        Ok(EvalConfig {
            beta,
            semantic_type_filter: self.evaluator.semantic_types.clone(),
        })
    }
}

/// Fails with a config error naming `key` unless `path` is set and exists.
pub fn require_path<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    match path {
        None => Err(Error::Config(format!("{key} is not set (config file or flag)"))),
        Some(p) if !p.exists() => Err(Error::Config(format!("{key}: {} does not exist", p.display()))),
        Some(p) => Ok(p),
    }
}

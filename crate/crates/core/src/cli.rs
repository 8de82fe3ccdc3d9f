//! Command-line driver. Every config key has a flag; a flag beats the
//! config file, which beats the built-in default.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 LLM failure (a debug subcommand's call failed, or more mentions
//! degraded than `pipeline.max_degraded` allows).

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::augmenter::generate_alternates;
use crate::config::{require_path, BackendChoice, RunConfig};
use crate::error::Error;
use crate::evaluator::{load_predictions, load_pubtator, score_predictions, EvalReport, PredictionRecord};
use crate::llm::{CachedBackend, ChatBackend, LiveBackend, LlmClient, LlmError, MockBackend, MockRules};
use crate::matchers::MatcherId;
use crate::ontology::{dictionary_stats, filter_by_semantic_types, load_dictionary, ConceptDictionary, ConceptId};
use crate::pipeline::{mentions_from_corpus, write_predictions, MergeRule, Pipeline, Prediction};
use crate::prompts::PromptTemplates;
use crate::pruner::{prune_candidates, PresentedConcept, PruneError, PruneMode};

#[derive(Debug, Parser)]
#[command(name = "llmnorm", version, about = "LLM-augmented biomedical concept normalization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize the concept dictionary.
    DictStats {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        ontology: OntologyArgs,
    },
    /// Normalize every gold mention of a corpus and write predictions JSONL.
    Normalize {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        stages: StageArgs,
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Predictions JSONL output; stdout when unset.
        #[arg(long, value_name = "PATH")]
        predictions: Option<PathBuf>,
    },
    /// Generate alternate phrasings for one mention (debugging aid).
    Augment {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        llm: LlmArgs,
        #[command(flatten)]
        k: AlternatesArg,
        #[command(flatten)]
        mention: MentionArgs,
    },
    /// Prune a ranked candidate list for one mention (debugging aid).
    Prune {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        ontology: OntologyArgs,
        #[command(flatten)]
        llm: LlmArgs,
        #[command(flatten)]
        strategy: StrategyArgs,
        #[command(flatten)]
        mention: MentionArgs,
        /// Candidate CUIs in ranking order, comma separated.
        #[arg(long, value_name = "CUI,...", value_delimiter = ',', required = true)]
        candidates: Vec<String>,
    },
    /// Score a predictions file against the gold corpus.
    Evaluate {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Predictions JSONL to score.
        #[arg(long, value_name = "PATH")]
        predictions: Option<PathBuf>,
        /// Report JSON output.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Normalize the corpus, then evaluate the predictions.
    Run {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        stages: StageArgs,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Predictions JSONL output.
        #[arg(long, value_name = "PATH")]
        predictions: Option<PathBuf>,
        /// Report JSON output.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// JSON run configuration; relative paths inside it resolve against its
    /// directory.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OntologyArgs {
    /// Concept dictionary TSV.
    #[arg(long, value_name = "PATH")]
    pub dictionary: Option<PathBuf>,
    /// Keep only concepts of these semantic types ("all" disables the filter).
    #[arg(long, value_name = "TUI,...", value_delimiter = ',')]
    pub dict_semantic_types: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct MatcherArgs {
    /// Candidate generator.
    #[arg(long, value_name = "NAME", value_parser = ["bm25", "ngram", "exact"])]
    pub matcher: Option<String>,
    /// BM25 term-frequency saturation.
    #[arg(long, value_name = "F")]
    pub bm25_k1: Option<f64>,
    /// BM25 length normalization.
    #[arg(long, value_name = "F")]
    pub bm25_b: Option<f64>,
    /// BM25 candidates per query.
    #[arg(long, value_name = "N")]
    pub bm25_top_k: Option<usize>,
    /// Index synonyms as well as preferred terms for BM25.
    #[arg(long, overrides_with = "no_index_synonyms")]
    pub index_synonyms: bool,
    /// Index preferred terms only.
    #[arg(long)]
    pub no_index_synonyms: bool,
    /// Character n-gram size.
    #[arg(long, value_name = "N")]
    pub ngram_n: Option<usize>,
    /// Minimum n-gram Jaccard similarity.
    #[arg(long, value_name = "F")]
    pub ngram_threshold: Option<f64>,
    /// N-gram candidates per query.
    #[arg(long, value_name = "N")]
    pub ngram_top_k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LlmArgs {
    /// LLM backend.
    #[arg(long, value_enum)]
    pub llm: Option<BackendChoice>,
    /// Model name sent to the endpoint.
    #[arg(long, value_name = "NAME")]
    pub model: Option<String>,
    /// Sampling temperature.
    #[arg(long, value_name = "F")]
    pub temperature: Option<f64>,
    /// Completion token limit.
    #[arg(long, value_name = "N")]
    pub max_tokens: Option<u32>,
    /// API root or full chat-completions URL.
    #[arg(long, value_name = "URL")]
    pub base_url: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, value_name = "VAR")]
    pub api_key_env: Option<String>,
    /// Per-request timeout.
    #[arg(long, value_name = "SECS")]
    pub timeout_secs: Option<f64>,
    /// Retries on 429, 5xx and timeouts.
    #[arg(long, value_name = "N")]
    pub max_retries: Option<u32>,
    /// First retry delay, doubled per retry.
    #[arg(long, value_name = "MS")]
    pub retry_backoff_ms: Option<u64>,
    /// Bound on in-flight LLM requests; also the default worker count.
    #[arg(long, value_name = "N")]
    pub max_concurrent: Option<usize>,
    /// Response cache directory.
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Rules file for the mock backend.
    #[arg(long, value_name = "PATH")]
    pub mock_rules: Option<PathBuf>,
    /// Prompt template file overriding the built-in prompts.
    #[arg(long, value_name = "PATH")]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlternatesArg {
    /// Alternate phrasings requested per mention.
    #[arg(long, value_name = "N")]
    pub k_alternates: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StrategyArgs {
    /// Pruning prompt style.
    #[arg(long, value_name = "MODE", value_parser = ["multiple_choice_cui", "multiple_choice_index", "binary", "mc_cui", "mc_index"])]
    pub prune_mode: Option<String>,
    /// Ask for step-by-step reasoning before the answer.
    #[arg(long, overrides_with = "no_cot")]
    pub cot: bool,
    /// Ask for the answer directly.
    #[arg(long)]
    pub no_cot: bool,
    /// Keep the top-ranked candidate when everything is rejected.
    #[arg(long, overrides_with = "no_top1")]
    pub top1: bool,
    /// Allow an empty final set.
    #[arg(long)]
    pub no_top1: bool,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    #[command(flatten)]
    pub ontology: OntologyArgs,
    #[command(flatten)]
    pub matcher: MatcherArgs,
    #[command(flatten)]
    pub llm: LlmArgs,
    /// Query the matcher with LLM-generated alternate phrasings too.
    #[arg(long, overrides_with = "no_augment")]
    pub augment: bool,
    /// Match the original span only.
    #[arg(long)]
    pub no_augment: bool,
    #[command(flatten)]
    pub k: AlternatesArg,
    /// Filter candidates with the LLM.
    #[arg(long, overrides_with = "no_prune")]
    pub prune: bool,
    /// Keep the ranked candidates as is.
    #[arg(long)]
    pub no_prune: bool,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    /// Context characters taken either side of a mention.
    #[arg(long, value_name = "CHARS")]
    pub context_window: Option<usize>,
    /// Candidates passed to the pruner and kept in final predictions.
    #[arg(long, value_name = "N")]
    pub max_candidates: Option<usize>,
    /// How scores for one CUI combine across query variants.
    #[arg(long, value_name = "RULE", value_parser = ["max", "sum"])]
    pub merge: Option<String>,
    /// Worker threads (defaults to --max-concurrent).
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    /// Degraded mentions tolerated before exiting with code 3.
    #[arg(long, value_name = "N")]
    pub max_degraded: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// PubTator gold corpus.
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<PathBuf>,
    /// Restrict gold mentions to these semantic types ("all" disables the
    /// filter).
    #[arg(long, value_name = "TUI,...", value_delimiter = ',')]
    pub semantic_types: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Beta for the F-beta score.
    #[arg(long, value_name = "F")]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MentionArgs {
    /// Mention text.
    #[arg(long, value_name = "TEXT")]
    pub mention: String,
    /// Surrounding text.
    #[arg(long, value_name = "TEXT", default_value = "")]
    pub context: String,
}

fn toggle(on: bool, off: bool) -> Option<bool> {
    match (on, off) {
        (true, _) => Some(true),
        (_, true) => Some(false),
        _ => None,
    }
}

fn type_filter(list: &Option<Vec<String>>) -> Option<Option<BTreeSet<String>>> {
    list.as_ref().map(|v| {
        let set: BTreeSet<String> = v.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        (!(set.len() == 1 && set.contains("all"))).then_some(set)
    })
}

macro_rules! overlay {
    ($($dst:expr => $src:expr),* $(,)?) => {
        $(if let Some(v) = $src { $dst = Some(v.into()); })*
    };
}

impl OntologyArgs {
    fn apply(&self, c: &mut RunConfig) {
        overlay!(c.ontology.dictionary => self.dictionary.clone());
        if let Some(f) = type_filter(&self.dict_semantic_types) {
            c.ontology.semantic_types = f;
        }
    }
}

impl MatcherArgs {
    fn apply(&self, c: &mut RunConfig) -> Result<(), Error> {
        if let Some(m) = &self.matcher {
            c.matchers.matcher = Some(m.parse::<MatcherId>()?);
        }
        let (b, n) = (&mut c.matchers.bm25, &mut c.matchers.ngram);
        overlay! {
            b.k1 => self.bm25_k1,
            b.b => self.bm25_b,
            b.top_k => self.bm25_top_k,
            b.index_synonyms => toggle(self.index_synonyms, self.no_index_synonyms),
            n.n => self.ngram_n,
            n.threshold => self.ngram_threshold,
            n.top_k => self.ngram_top_k,
        }
        Ok(())
    }
}

impl LlmArgs {
    fn apply(&self, c: &mut RunConfig) {
        let l = &mut c.llm_client;
        overlay! {
            l.backend => self.llm,
            l.model => self.model.clone(),
            l.temperature => self.temperature,
            l.max_tokens => self.max_tokens,
            l.base_url => self.base_url.clone(),
            l.api_key_env => self.api_key_env.clone(),
            l.timeout_secs => self.timeout_secs,
            l.max_retries => self.max_retries,
            l.retry_backoff_ms => self.retry_backoff_ms,
            l.max_concurrent_requests => self.max_concurrent,
            l.cache_dir => self.cache_dir.clone(),
            l.mock_rules => self.mock_rules.clone(),
            c.prompts.templates => self.templates.clone(),
        }
    }
}

impl StrategyArgs {
    fn apply(&self, c: &mut RunConfig) -> Result<(), Error> {
        if let Some(m) = &self.prune_mode {
            c.pruner.mode = Some(m.parse::<PruneMode>()?);
        }
        overlay! {
            c.pruner.chain_of_thought => toggle(self.cot, self.no_cot),
            c.pruner.top1 => toggle(self.top1, self.no_top1),
        }
        Ok(())
    }
}

impl StageArgs {
    fn apply(&self, c: &mut RunConfig) -> Result<(), Error> {
        self.ontology.apply(c);
        self.matcher.apply(c)?;
        self.llm.apply(c);
        self.strategy.apply(c)?;
        if let Some(m) = &self.merge {
            c.pipeline.merge = Some(if m == "sum" { MergeRule::Sum } else { MergeRule::Max });
        }
        overlay! {
            c.augmenter.enabled => toggle(self.augment, self.no_augment),
            c.augmenter.k => self.k.k_alternates,
            c.pruner.enabled => toggle(self.prune, self.no_prune),
            c.pipeline.context_window => self.context_window,
            c.pipeline.max_candidates_for_prune => self.max_candidates,
            c.pipeline.threads => self.threads,
            c.pipeline.max_degraded => self.max_degraded,
        }
        Ok(())
    }
}

impl CorpusArgs {
    fn apply(&self, c: &mut RunConfig) {
        overlay!(c.evaluator.corpus => self.corpus.clone());
        if let Some(f) = type_filter(&self.semantic_types) {
            c.evaluator.semantic_types = f;
        }
    }
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
    Llm(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Llm(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "data error: {e}"),
            CliError::Llm(m) => write!(f, "LLM error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Usage(m),
            other => CliError::Data(other),
        }
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        CliError::Llm(e.to_string())
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code. Diagnostics go to stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("llmnorm: {e}");
            e.exit_code()
        }
    }
}

fn base_config(arg: &ConfigArg) -> CliResult<RunConfig> {
    match &arg.config {
        None => Ok(RunConfig::default()),
        Some(p) if !p.exists() => Err(CliError::Usage(format!("config file {} does not exist", p.display()))),
        Some(p) => Ok(RunConfig::load(p)?),
    }
}

pub fn execute(command: Command) -> CliResult {
    match command {
        Command::DictStats { config, ontology } => {
            let mut cfg = base_config(&config)?;
            ontology.apply(&mut cfg);
            let dict = load_dict(&cfg)?;
            #[derive(Serialize)]
            struct Out<'a> {
                dictionary: &'a str,
                fingerprint: String,
                #[serde(flatten)]
                stats: crate::ontology::DictionaryStats,
            }
            print_json(&Out {
                dictionary: dict.source_path(),
                fingerprint: dict.fingerprint(),
                stats: dictionary_stats(&dict),
            })
        }
        Command::Normalize { config, stages, corpus, predictions } => {
            let mut cfg = base_config(&config)?;
            stages.apply(&mut cfg)?;
            corpus.apply(&mut cfg);
            overlay!(cfg.output.predictions => predictions);
            let (preds, budget) = normalize(&cfg)?;
            match &cfg.output.predictions {
                Some(p) => write_predictions_file(p, &preds)?,
                None => {
                    let mut out = std::io::stdout().lock();
                    for p in &preds {
                        let line = serde_json::to_string(p).map_err(|e| Error::json("serializing prediction", e))?;
                        let _ = writeln!(out, "{line}");
                    }
                }
            }
            budget
        }
        Command::Augment { config, llm, k, mention } => {
            let mut cfg = base_config(&config)?;
            llm.apply(&mut cfg);
            overlay!(cfg.augmenter.k => k.k_alternates);
            let k = cfg.pipeline_config()?.k_alternates;
            let client = build_client(&cfg)?;
            let templates = load_templates(&cfg)?;
            let set = generate_alternates(&client, &templates, &mention.mention, &mention.context, k)?;
            print_json(&set)
        }
        Command::Prune { config, ontology, llm, strategy, mention, candidates } => {
            let mut cfg = base_config(&config)?;
            ontology.apply(&mut cfg);
            llm.apply(&mut cfg);
            strategy.apply(&mut cfg)?;
            cfg.pruner.enabled = Some(true);
            let strategy = cfg.prune_strategy().expect("pruner enabled");
            let dict = load_dict(&cfg)?;
            let presented = candidates
                .iter()
                .map(|c| {
                    let cui = ConceptId::parse(c.trim())?;
                    Ok(PresentedConcept::lookup(&dict, &cui, ""))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let client = build_client(&cfg)?;
            let templates = load_templates(&cfg)?;
            match prune_candidates(&client, &templates, &mention.mention, &mention.context, &presented, &strategy) {
                Ok(v) => print_json(&v),
                Err(PruneError::Input(e)) => Err(e.into()),
                Err(PruneError::Llm(e)) => Err(e.into()),
            }
        }
        Command::Evaluate { config, corpus, eval, predictions, report } => {
            let mut cfg = base_config(&config)?;
            corpus.apply(&mut cfg);
            overlay! {
                cfg.evaluator.beta => eval.beta,
                cfg.output.predictions => predictions,
                cfg.output.report => report,
            }
            let records = load_predictions(require_path(&cfg.output.predictions, "output.predictions")?)?;
            evaluate(&cfg, &records)
        }
        Command::Run { config, stages, corpus, eval, predictions, report } => {
            let mut cfg = base_config(&config)?;
            if stages.llm.llm.is_none() && cfg.llm_client.backend.is_none() {
                cfg.llm_client.backend = Some(BackendChoice::Cache);
            }
            stages.apply(&mut cfg)?;
            corpus.apply(&mut cfg);
            overlay! {
                cfg.evaluator.beta => eval.beta,
                cfg.output.predictions => predictions,
                cfg.output.report => report,
            }
            let (preds, budget) = normalize(&cfg)?;
            if let Some(p) = &cfg.output.predictions {
                write_predictions_file(p, &preds)?;
            }
            let records: Vec<PredictionRecord> = preds
                .iter()
                .map(|p| PredictionRecord {
                    doc_id: p.doc_id.clone(),
                    start: p.start,
                    end: p.end,
                    final_cuis: p.final_cuis.clone(),
                    line: 0,
                })
                .collect();
            evaluate(&cfg, &records)?;
            budget
        }
    }
}

fn load_dict(cfg: &RunConfig) -> CliResult<ConceptDictionary> {
    let dict = load_dictionary(require_path(&cfg.ontology.dictionary, "ontology.dictionary")?)?;
    Ok(match &cfg.ontology.semantic_types {
        Some(types) => filter_by_semantic_types(&dict, types),
        None => dict,
    })
}

fn load_templates(cfg: &RunConfig) -> CliResult<PromptTemplates> {
    Ok(match &cfg.prompts.templates {
        Some(_) => PromptTemplates::load(require_path(&cfg.prompts.templates, "prompts.templates")?)?,
        None => PromptTemplates::default(),
    })
}

fn build_client(cfg: &RunConfig) -> CliResult<LlmClient> {
    let settings = cfg.request_settings()?;
    let backend: Arc<dyn ChatBackend> = match cfg.backend() {
        BackendChoice::Mock => {
            let rules = MockRules::load(require_path(&cfg.llm_client.mock_rules, "llm_client.mock_rules")?)?;
            Arc::new(MockBackend::new(rules))
        }
        BackendChoice::Live => Arc::new(LiveBackend::new(cfg.endpoint()?)),
        BackendChoice::Cache => Arc::new(CachedBackend::new(cfg.cache_dir(), Arc::new(LiveBackend::new(cfg.endpoint()?)))),
    };
    Ok(LlmClient::new(backend, settings))
}

/// Runs the pipeline over the corpus mentions. The second value is the
/// degradation-budget verdict, reported after outputs are written.
fn normalize(cfg: &RunConfig) -> CliResult<(Vec<Prediction>, CliResult)> {
    let pcfg = cfg.pipeline_config()?;
    let threads = cfg.threads()?;
    let corpus_path = require_path(&cfg.evaluator.corpus, "evaluator.corpus")?;
    let dict = load_dict(cfg)?;
    let corpus = load_pubtator(corpus_path)?;
    let client = if pcfg.uses_llm() { Some(build_client(cfg)?) } else { None };
    let templates = load_templates(cfg)?;
    let mentions = mentions_from_corpus(&corpus, pcfg.context_window, cfg.evaluator.semantic_types.as_ref());
    let pipeline = Pipeline::new(&dict, pcfg, client, templates)?;
    log::info!("normalizing {} mentions on {threads} thread(s)", mentions.len());
    let (preds, summary) = pipeline.normalize_corpus(&mentions, threads);
    log::info!(
        "done: {} mentions, {} degraded, {} LLM calls ({} cache hits, {} errors)",
        summary.mentions,
        summary.degraded,
        summary.llm_calls,
        summary.cache_hits,
        summary.llm_errors
    );
    let budget = match cfg.pipeline.max_degraded {
        Some(max) if summary.degraded > max => Err(CliError::Llm(format!(
            "{} mentions degraded by LLM failures, more than the allowed {max}",
            summary.degraded
        ))),
        _ => Ok(()),
    };
    Ok((preds, budget))
}

fn evaluate(cfg: &RunConfig, records: &[PredictionRecord]) -> CliResult {
    let eval_cfg = cfg.eval_config()?;
    let corpus = load_pubtator(require_path(&cfg.evaluator.corpus, "evaluator.corpus")?)?;
    let report = score_predictions(records, &corpus.annotations, &eval_cfg)?;
    print!("{}", report.table());
    println!("{}", report.summary_line());
    if let Some(p) = &cfg.output.report {
        write_report(p, &report)?;
    }
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<(), Error> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

fn write_predictions_file(path: &Path, preds: &[Prediction]) -> CliResult {
    ensure_parent(path)?;
    Ok(write_predictions(path, preds)?)
}

fn write_report(path: &Path, report: &EvalReport) -> CliResult {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Error::json("serializing report", e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

fn print_json<T: Serialize>(value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json("serializing output", e))?;
    println!("{text}");
    Ok(())
}

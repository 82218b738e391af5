//! End-to-end experiment: pools, pair dataset, scorer, self-retrieval.
//!
//! 1. Select a search pool and a disjoint training pool.
//! 2. Slice training descriptions, build the balanced pair dataset and hold
//!    out a validation split.
//! 3. Train the baseline scorer or attach an external one.
//! 4. Rank the search pool for every reference abstract and report.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{self_retrieval_eval, DatasetStats, EvalError, EvalReport, RetrievalOptions, SynthSpec};
use crate::corpus::{
    filter_corpus, load_corpus, split_disjoint, ClaimMode, CorpusError, CorpusFilter, PatentDoc, SearchSelection,
};
use crate::encoder::{load_vocabulary, Encoder, DEFAULT_MAX_LEN};
use crate::pairgen::{build_dataset, claim_source, label_counts, split_validation, write_pairs, ValidationSize};
use crate::scorer::{evaluate_accuracy, train_baseline, ExternalScorer, PairScorer, TrainConfig};
use crate::slicer::{slice_corpus, SliceBounds};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusSource {
    Path(PathBuf),
    Synthetic(SynthSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrainSelection {
    /// Every training-filter match outside the search pool.
    #[default]
    All,
    /// A seeded random sample of that set.
    Count(usize),
    /// Exactly these ids; overlap with the search pool is an error.
    Ids(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSelection {
    Ids(Vec<String>),
    /// A seeded random sample of the search pool.
    Count(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerBackend {
    Baseline {
        epochs: usize,
        learning_rate: f64,
    },
    /// Program and arguments of a process speaking the scorer protocol.
    External {
        command: Vec<String>,
    },
}

impl Default for ScorerBackend {
    fn default() -> Self {
        let defaults = TrainConfig::default();
        ScorerBackend::Baseline {
            epochs: defaults.epochs,
            learning_rate: defaults.learning_rate,
        }
    }
}

fn default_top_k() -> usize {
    10
}

fn default_max_len() -> usize {
    DEFAULT_MAX_LEN
}

fn default_validation() -> ValidationSize {
    ValidationSize::Fraction(0.125)
}

/// Declarative experiment description (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub corpus: CorpusSource,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub train_filter: CorpusFilter,
    #[serde(default)]
    pub search_filter: CorpusFilter,
    pub search: SearchSelection,
    #[serde(default)]
    pub train: TrainSelection,
    pub references: ReferenceSelection,
    #[serde(default)]
    pub slice_bounds: SliceBounds,
    #[serde(default)]
    pub claim_mode: ClaimMode,
    #[serde(default = "default_validation")]
    pub validation: ValidationSize,
    #[serde(default)]
    pub scorer: ScorerBackend,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default)]
    pub exclude_references: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab: Option<PathBuf>,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| EvalError::InvalidConfig(format!("{}: {e}", path.display())).into())
    }

    fn stage_seed(&self, stage: &str) -> u64 {
        seed::derive(self.seed, "experiment", stage, 0)
    }
}

/// The resolved document pools.
#[derive(Debug, Clone)]
pub struct Pools {
    pub corpus_docs: usize,
    pub train: Vec<PatentDoc>,
    pub search: Vec<PatentDoc>,
    pub references: Vec<PatentDoc>,
}

fn load_docs(config: &ExperimentConfig) -> Result<Vec<PatentDoc>> {
    match &config.corpus {
        CorpusSource::Path(path) => Ok(load_corpus(path, config.strict)?.docs),
        CorpusSource::Synthetic(spec) => Ok(super::synth_corpus(spec)?),
    }
}

/// Steps 1 and 3 of the experiment: disjoint training and search pools plus
/// the reference patents.
pub fn resolve_pools(config: &ExperimentConfig, docs: &[PatentDoc]) -> Result<Pools> {
    let search_candidates = filter_corpus(docs, &config.search_filter);
    let (_, search) = split_disjoint(&search_candidates, &config.search, config.stage_seed("search"))?;
    let search_ids: HashSet<&str> = search.iter().map(|d| d.id.as_str()).collect();

    let train_candidates = filter_corpus(docs, &config.train_filter);
    let train = match &config.train {
        TrainSelection::All => train_candidates
            .into_iter()
            .filter(|d| !search_ids.contains(d.id.as_str()))
            .collect(),
        TrainSelection::Count(n) => {
            let rest: Vec<PatentDoc> = train_candidates
                .into_iter()
                .filter(|d| !search_ids.contains(d.id.as_str()))
                .collect();
            split_disjoint(&rest, &SearchSelection::Count(*n), config.stage_seed("train"))?.1
        }
        TrainSelection::Ids(ids) => split_disjoint(&train_candidates, &SearchSelection::Ids(ids.clone()), 0)?.1,
    };
    let overlap: Vec<String> = train
        .iter()
        .filter(|d| search_ids.contains(d.id.as_str()))
        .map(|d| d.id.clone())
        .collect();
    if !overlap.is_empty() {
        return Err(EvalError::OverlapDetected(overlap).into());
    }

    let references = match &config.references {
        ReferenceSelection::Ids(ids) => ids
            .iter()
            .map(|id| {
                search
                    .iter()
                    .find(|d| &d.id == id)
                    .cloned()
                    .ok_or_else(|| EvalError::ReferenceNotInPool(id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?,
        ReferenceSelection::Count(n) => {
            split_disjoint(&search, &SearchSelection::Count(*n), config.stage_seed("references"))
                .map_err(|e| match e {
                    CorpusError::InvalidCount { count, size } => {
                        EvalError::InvalidConfig(format!("{count} references requested from a search pool of {size}"))
                    }
                    other => EvalError::InvalidConfig(other.to_string()),
                })?
                .1
        }
    };
    Ok(Pools {
        corpus_docs: docs.len(),
        train,
        search,
        references,
    })
}

/// Runs the whole experiment. When `out_dir` is given, writes the resolved
/// config, pair files, model (baseline only), report and text tables there.
pub fn run_experiment(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<EvalReport> {
    if config.top_k == 0 {
        return Err(EvalError::InvalidConfig("top_k must be at least 1".into()).into());
    }
    config.slice_bounds.validate()?;
    let encoder = match &config.vocab {
        Some(path) => Some(Encoder::new(load_vocabulary(path)?, config.max_len)?),
        None => None,
    };

    let docs = load_docs(config)?;
    let pools = resolve_pools(config, &docs)?;

    let pieces = slice_corpus(&pools.train, config.slice_bounds, config.stage_seed("slice"))?;
    let source = claim_source(&pools.train, config.claim_mode)?;
    let pairs = build_dataset(&pieces, &source, config.stage_seed("pairs"))?;
    let (negative_pairs, positive_pairs) = label_counts(&pairs);
    let (train_pairs, validation_pairs) = split_validation(&pairs, config.validation, config.stage_seed("validation"))?;

    let mut stats = DatasetStats {
        corpus_docs: pools.corpus_docs,
        train_docs: pools.train.len(),
        search_docs: pools.search.len(),
        pieces: pieces.len(),
        positive_pairs,
        negative_pairs,
        train_pairs: train_pairs.len(),
        validation_pairs: validation_pairs.len(),
        train_accuracy: None,
        validation_accuracy: None,
    };

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut resolved = config.clone();
        resolved.references = ReferenceSelection::Ids(pools.references.iter().map(|d| d.id.clone()).collect());
        write_json(&dir.join("config.json"), &resolved)?;
        write_pairs(dir.join("pairs.jsonl"), &train_pairs)?;
        write_pairs(dir.join("validation.jsonl"), &validation_pairs)?;
    }

    let scorer: Box<dyn PairScorer> = match &config.scorer {
        ScorerBackend::Baseline { epochs, learning_rate } => {
            let outcome = train_baseline(
                &train_pairs,
                &TrainConfig {
                    epochs: *epochs,
                    learning_rate: *learning_rate,
                    seed: config.stage_seed("train_baseline"),
                },
            )?;
            stats.train_accuracy = Some(outcome.accuracy);
            if !validation_pairs.is_empty() {
                stats.validation_accuracy = Some(evaluate_accuracy(&outcome.model, &validation_pairs));
            }
            if let Some(dir) = out_dir {
                outcome.model.save(dir.join("model.json"))?;
            }
            Box::new(outcome.model)
        }
        ScorerBackend::External { command } => {
            let (program, args) = command
                .split_first()
                .ok_or_else(|| EvalError::InvalidConfig("external scorer command is empty".into()))?;
            Box::new(ExternalScorer::new(program.clone(), args.to_vec()))
        }
    };

    let mut report = self_retrieval_eval(
        &pools.references,
        &pools.search,
        scorer.as_ref(),
        config.top_k,
        RetrievalOptions {
            claim_mode: ClaimMode::FirstOnly,
            exclude_references: config.exclude_references,
            encoder: encoder.as_ref(),
        },
    )?;
    report.stats = stats;

    if let Some(dir) = out_dir {
        write_json(&dir.join("report.json"), &report)?;
        let tables = dir.join("tables.txt");
        fs::write(&tables, report.render_tables()).map_err(|e| Error::io(&tables, e))?;
    }
    Ok(report)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

//! Self-retrieval evaluation.
//!
//! Each reference patent's abstract is used as the invention description and
//! all candidate claims of the search pool are ranked against it. The rank of
//! the reference's own first independent claim measures the scorer.

mod experiment;
pub mod metrics;
pub mod synth;

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{independent_claims, ClaimMode, PatentDoc};
use crate::encoder::Encoder;
use crate::ranker::{rank, RankedResult};
use crate::scorer::PairScorer;

pub use experiment::{
    resolve_pools, run_experiment, CorpusSource, ExperimentConfig, Pools, ReferenceSelection, ScorerBackend,
    TrainSelection,
};
pub use metrics::{mean_reciprocal_rank, recall_at_k};
pub use synth::{synth_corpus, SynthSpec};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid synthetic corpus spec: {0}")]
    InvalidSpec(String),
    #[error("reference {0} is not in the search pool")]
    ReferenceNotInPool(String),
    #[error("training and search pools overlap on {} patent(s), first {}", .0.len(), .0[0])]
    OverlapDetected(Vec<String>),
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
}

/// Per-reference outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceResult {
    pub reference_id: String,
    /// Rank of the reference's own first independent claim; `None` when the
    /// reference was excluded from the candidates.
    pub self_rank: Option<usize>,
    pub candidates: usize,
    /// The top-k table.
    pub ranking: Vec<RankedResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub corpus_docs: usize,
    pub train_docs: usize,
    pub search_docs: usize,
    pub pieces: usize,
    pub positive_pairs: usize,
    pub negative_pairs: usize,
    pub train_pairs: usize,
    pub validation_pairs: usize,
    pub train_accuracy: Option<f64>,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub references: Vec<ReferenceResult>,
    pub recall_at_1: f64,
    pub recall_at_10: f64,
    pub mrr: f64,
    pub stats: DatasetStats,
}

impl EvalReport {
    pub fn self_ranks(&self) -> Vec<Option<usize>> {
        self.references.iter().map(|r| r.self_rank).collect()
    }

    /// Every reference table, separated by blank lines.
    pub fn render_tables(&self) -> String {
        self.references
            .iter()
            .map(|r| crate::ranker::render_table(&r.reference_id, &r.ranking))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RetrievalOptions<'a> {
    pub claim_mode: ClaimMode,
    /// Drop the references from the candidates (realistic FTO use).
    pub exclude_references: bool,
    pub encoder: Option<&'a Encoder>,
}

/// Ranks the search pool for every reference abstract.
///
/// References are evaluated in parallel; the report lists them in input
/// order. `stats` is left at its default.
pub fn self_retrieval_eval(
    references: &[PatentDoc],
    search_pool: &[PatentDoc],
    scorer: &dyn PairScorer,
    top_k: usize,
    options: RetrievalOptions<'_>,
) -> crate::Result<EvalReport> {
    if top_k == 0 {
        return Err(crate::ranker::RankError::InvalidTopK.into());
    }
    let pool_ids: HashSet<&str> = search_pool.iter().map(|d| d.id.as_str()).collect();
    if let Some(missing) = references.iter().find(|r| !pool_ids.contains(r.id.as_str())) {
        return Err(EvalError::ReferenceNotInPool(missing.id.clone()).into());
    }
    let reference_ids: HashSet<&str> = references.iter().map(|d| d.id.as_str()).collect();
    let candidates: Vec<PatentDoc> = if options.exclude_references {
        search_pool
            .iter()
            .filter(|d| !reference_ids.contains(d.id.as_str()))
            .cloned()
            .collect()
    } else {
        search_pool.to_vec()
    };

    let results: Vec<ReferenceResult> = references
        .par_iter()
        .map(|reference| -> crate::Result<ReferenceResult> {
            let full = rank(
                &reference.id,
                &reference.abstract_text,
                &candidates,
                options.claim_mode,
                scorer,
                usize::MAX,
                options.encoder,
            )?;
            let self_rank = if options.exclude_references {
                None
            } else {
                let own = &independent_claims(reference, ClaimMode::FirstOnly)?[0];
                full.results
                    .iter()
                    .find(|r| r.patent_id == reference.id && r.claim_number == own.number)
                    .map(|r| r.rank)
            };
            let candidates = full.results.len();
            let mut ranking = full.results;
            ranking.truncate(top_k);
            Ok(ReferenceResult {
                reference_id: reference.id.clone(),
                self_rank,
                candidates,
                ranking,
                warnings: full.warnings,
            })
        })
        .collect::<crate::Result<_>>()?;

    let ranks: Vec<Option<usize>> = results.iter().map(|r| r.self_rank).collect();
    Ok(EvalReport {
        recall_at_1: recall_at_k(&ranks, 1),
        recall_at_10: recall_at_k(&ranks, 10),
        mrr: mean_reciprocal_rank(&ranks),
        references: results,
        stats: DatasetStats::default(),
    })
}

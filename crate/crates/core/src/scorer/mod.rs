//! Pair scoring.
//!
//! Every backend returns two logits per `(text_a, text_b)` pair: `logit_0`
//! for the mismatched label and `logit_1` for the matched label. Candidates
//! are ranked by `logit_1`; `prob_1` is its softmax probability.

mod baseline;
mod external;
mod features;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baseline::{
    evaluate_accuracy, idf_from_pairs, score_batch_baseline, train_baseline, BaselineModel, Normalization, TrainConfig,
    TrainOutcome, MODEL_VERSION,
};
pub use external::{exchange, ExternalScorer};
pub use features::{extract_features, terms, IdfTable, FEATURE_NAMES, N_FEATURES};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("non-finite logit input ({0}, {1})")]
    NonFiniteInput(f64, f64),
    #[error("training data holds a single label")]
    SingleClassDataset,
    #[error("protocol error: {0}")]
    ProtocolError(String),
    #[error("no response for {} pair(s), first {:?}", .0.len(), .0.first())]
    MissingResponse(Vec<(String, String)>),
    #[error("non-finite logit for ({0}, {1})")]
    NonFiniteLogit(String, String),
    #[error("duplicate request key ({0}, {1})")]
    DuplicateRequest(String, String),
    #[error("unsupported model file: {0}")]
    BadModel(String),
    #[error("external scorer i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// One pair to score. `qid`/`cid` identify the query and the candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub qid: String,
    pub cid: String,
    pub text_a: String,
    pub text_b: String,
}

/// Two logits and the matched-label probability for one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResult {
    pub qid: String,
    pub cid: String,
    pub logit_0: f64,
    pub logit_1: f64,
    pub prob_1: f64,
}

impl ScoreResult {
    pub fn new(qid: String, cid: String, logit_0: f64, logit_1: f64) -> Result<Self, ScoreError> {
        let (_, prob_1) = softmax(logit_0, logit_1)?;
        Ok(ScoreResult {
            qid,
            cid,
            logit_0,
            logit_1,
            prob_1,
        })
    }
}

/// Two-class softmax with max subtraction.
pub fn softmax(logit_0: f64, logit_1: f64) -> Result<(f64, f64), ScoreError> {
    if !logit_0.is_finite() || !logit_1.is_finite() {
        return Err(ScoreError::NonFiniteInput(logit_0, logit_1));
    }
    let max = logit_0.max(logit_1);
    let e0 = (logit_0 - max).exp();
    let e1 = (logit_1 - max).exp();
    let sum = e0 + e1;
    Ok((e0 / sum, e1 / sum))
}

/// A backend that scores a batch of pairs, one result per request in
/// request order.
pub trait PairScorer: Sync {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResult>, ScoreError>;
}

impl PairScorer for BaselineModel {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResult>, ScoreError> {
        score_batch_baseline(self, requests)
    }
}

//! Logistic-regression baseline over lexical overlap features.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{extract_features, IdfTable, FEATURE_NAMES, N_FEATURES};
use super::{ScoreError, ScoreRequest, ScoreResult};
use crate::pairgen::{Label, TrainingPair};

pub const MODEL_VERSION: u32 = 1;

/// Per-feature min-max constants frozen at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalization {
    fn fit(rows: &[[f64; N_FEATURES]]) -> Self {
        let mut min = vec![f64::INFINITY; N_FEATURES];
        let mut max = vec![f64::NEG_INFINITY; N_FEATURES];
        for row in rows {
            for (j, &x) in row.iter().enumerate() {
                min[j] = min[j].min(x);
                max[j] = max[j].max(x);
            }
        }
        Normalization { min, max }
    }

    /// Maps a raw row into training range `[0, 1]`. Constant features map
    /// to 0. Values outside the training range are not clamped.
    pub fn apply(&self, raw: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        let mut out = [0.0; N_FEATURES];
        for j in 0..N_FEATURES {
            let span = self.max[j] - self.min[j];
            out[j] = if span > 0.0 { (raw[j] - self.min[j]) / span } else { 0.0 };
        }
        out
    }
}

/// Trained baseline scorer, serialized as versioned JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub version: u32,
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub normalization: Normalization,
    pub idf: IdfTable,
    pub seed: u64,
}

impl BaselineModel {
    /// Normalized features of one pair.
    pub fn features(&self, desc_text: &str, claim_text: &str) -> [f64; N_FEATURES] {
        self.normalization
            .apply(&extract_features(desc_text, claim_text, &self.idf))
    }

    pub fn logit(&self, features: &[f64; N_FEATURES]) -> f64 {
        self.bias + self.weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> crate::Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).expect("model serializes");
        fs::write(path, json + "\n").map_err(|e| crate::Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> crate::Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        let model: BaselineModel =
            serde_json::from_str(&text).map_err(|e| ScoreError::BadModel(format!("{}: {e}", path.display())))?;
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<(), ScoreError> {
        if self.version != MODEL_VERSION {
            return Err(ScoreError::BadModel(format!(
                "version {} (expected {MODEL_VERSION})",
                self.version
            )));
        }
        if self.feature_names != FEATURE_NAMES {
            return Err(ScoreError::BadModel(format!("feature names {:?}", self.feature_names)));
        }
        let lengths_ok = self.weights.len() == N_FEATURES
            && self.normalization.min.len() == N_FEATURES
            && self.normalization.max.len() == N_FEATURES;
        let finite = self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite());
        if !lengths_ok || !finite {
            return Err(ScoreError::BadModel("malformed parameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Recorded with the model. Initialization is all-zero and the descent
    /// is full-batch, so the fit itself does not consume randomness.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: BaselineModel,
    /// Training accuracy of the final model (logit > 0 predicts matched).
    pub accuracy: f64,
    /// Mean cross-entropy before the first update and after every epoch.
    pub loss_trace: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn mean_loss(rows: &[[f64; N_FEATURES]], labels: &[f64], weights: &[f64], bias: f64) -> f64 {
    let total: f64 = rows
        .iter()
        .zip(labels)
        .map(|(x, y)| {
            let z = bias + weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            softplus(z) - y * z
        })
        .sum();
    total / rows.len() as f64
}

/// Builds the idf table from the distinct texts of `pairs`.
pub fn idf_from_pairs(pairs: &[TrainingPair]) -> IdfTable {
    let texts: BTreeSet<&str> = pairs
        .iter()
        .flat_map(|p| [p.description_text.as_str(), p.claim_text.as_str()])
        .collect();
    IdfTable::from_texts(texts)
}

/// Fits the baseline by full-batch gradient descent on mean cross-entropy.
pub fn train_baseline(pairs: &[TrainingPair], config: &TrainConfig) -> Result<TrainOutcome, ScoreError> {
    let matched = pairs.iter().filter(|p| p.label == Label::Matched).count();
    if matched == 0 || matched == pairs.len() {
        return Err(ScoreError::SingleClassDataset);
    }

    let idf = idf_from_pairs(pairs);
    let raw: Vec<[f64; N_FEATURES]> = pairs
        .par_iter()
        .map(|p| extract_features(&p.description_text, &p.claim_text, &idf))
        .collect();
    let normalization = Normalization::fit(&raw);
    let rows: Vec<[f64; N_FEATURES]> = raw.iter().map(|r| normalization.apply(r)).collect();
    let labels: Vec<f64> = pairs
        .iter()
        .map(|p| if p.label == Label::Matched { 1.0 } else { 0.0 })
        .collect();

    let n = rows.len() as f64;
    let mut weights = vec![0.0; N_FEATURES];
    let mut bias = 0.0;
    let mut loss_trace = Vec::with_capacity(config.epochs + 1);
    loss_trace.push(mean_loss(&rows, &labels, &weights, bias));
    for _ in 0..config.epochs {
        let mut grad_w = [0.0; N_FEATURES];
        let mut grad_b = 0.0;
        for (x, y) in rows.iter().zip(&labels) {
            let z = bias + weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            let residual = sigmoid(z) - y;
            for j in 0..N_FEATURES {
                grad_w[j] += residual * x[j];
            }
            grad_b += residual;
        }
        for j in 0..N_FEATURES {
            weights[j] -= config.learning_rate * grad_w[j] / n;
        }
        bias -= config.learning_rate * grad_b / n;
        loss_trace.push(mean_loss(&rows, &labels, &weights, bias));
    }

    let model = BaselineModel {
        version: MODEL_VERSION,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        weights,
        bias,
        normalization,
        idf,
        seed: config.seed,
    };
    let accuracy = accuracy(&model, &rows, &labels);
    Ok(TrainOutcome {
        model,
        accuracy,
        loss_trace,
    })
}

fn accuracy(model: &BaselineModel, rows: &[[f64; N_FEATURES]], labels: &[f64]) -> f64 {
    let correct = rows
        .iter()
        .zip(labels)
        .filter(|(x, y)| (model.logit(x) > 0.0) == (**y == 1.0))
        .count();
    correct as f64 / rows.len() as f64
}

/// Fraction of `pairs` whose label the model predicts (logit > 0 = matched).
pub fn evaluate_accuracy(model: &BaselineModel, pairs: &[TrainingPair]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let correct: usize = pairs
        .par_iter()
        .filter(|p| {
            let z = model.logit(&model.features(&p.description_text, &p.claim_text));
            (z > 0.0) == (p.label == Label::Matched)
        })
        .count();
    correct as f64 / pairs.len() as f64
}

/// Scores requests with `logit_0 = 0` and `logit_1 = w . f + b`.
pub fn score_batch_baseline(model: &BaselineModel, requests: &[ScoreRequest]) -> Result<Vec<ScoreResult>, ScoreError> {
    requests
        .par_iter()
        .map(|r| {
            let logit_1 = model.logit(&model.features(&r.text_a, &r.text_b));
            ScoreResult::new(r.qid.clone(), r.cid.clone(), 0.0, logit_1)
        })
        .collect()
}

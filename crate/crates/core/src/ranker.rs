//! Query construction and claim ranking.
//!
//! An invention description is paired with every selected independent claim
//! of the candidate patents. Pairs are scored and sorted by the matched-label
//! logit, highest first; ties go to the smaller `(patent_id, claim_number)`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{independent_claims, ClaimMode, CorpusError, PatentDoc};
use crate::encoder::{Encoder, DEFAULT_MAX_LEN, SPECIAL_TOKENS_PER_PAIR};
use crate::scorer::{terms, PairScorer, ScoreError, ScoreRequest, ScoreResult};

#[derive(Debug, Error)]
pub enum RankError {
    #[error("query description is empty")]
    EmptyQuery,
    #[error("top_k must be at least 1")]
    InvalidTopK,
    #[error("scorer returned {got} results for {expected} requests")]
    ResultCount { expected: usize, got: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// The invention description paired with one candidate claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryInput {
    pub query_id: String,
    pub description_ip: String,
    pub patent_id: String,
    pub claim_number: u32,
    pub claim_text: String,
}

impl QueryInput {
    /// Candidate key used on the scorer wire: `<patent_id>#<claim_number>`.
    pub fn candidate_id(&self) -> String {
        format!("{}#{}", self.patent_id, self.claim_number)
    }

    pub fn to_request(&self) -> ScoreRequest {
        ScoreRequest {
            qid: self.query_id.clone(),
            cid: self.candidate_id(),
            text_a: self.description_ip.clone(),
            text_b: self.claim_text.clone(),
        }
    }
}

/// One ranked candidate claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub rank: usize,
    pub patent_id: String,
    pub claim_number: u32,
    pub logit_1: f64,
    pub prob_1: f64,
}

/// Query inputs plus warnings about pairs that exceed the encoder length.
#[derive(Debug, Clone, Default)]
pub struct QueryBatch {
    pub inputs: Vec<QueryInput>,
    pub warnings: Vec<String>,
}

/// Builds one input per (candidate patent, selected independent claim).
///
/// With an encoder the length check is exact. Without one, the word-level
/// token count (a lower bound on the subword count) is compared against the
/// default sequence length.
pub fn build_query_inputs(
    query_id: &str,
    description_ip: &str,
    candidates: &[PatentDoc],
    mode: ClaimMode,
    encoder: Option<&Encoder>,
) -> Result<QueryBatch, RankError> {
    if description_ip.trim().is_empty() {
        return Err(RankError::EmptyQuery);
    }
    let query_len = terms(description_ip).len();
    let mut batch = QueryBatch::default();
    for doc in candidates {
        for claim in independent_claims(doc, mode)? {
            let over_budget = match encoder {
                Some(enc) => enc.needs_truncation(description_ip, &claim.text),
                None => query_len + terms(&claim.text).len() + SPECIAL_TOKENS_PER_PAIR > DEFAULT_MAX_LEN,
            };
            if over_budget {
                batch.warnings.push(format!(
                    "query {query_id} with {} claim {} exceeds the input length and will be truncated",
                    doc.id, claim.number
                ));
            }
            batch.inputs.push(QueryInput {
                query_id: query_id.to_string(),
                description_ip: description_ip.to_string(),
                patent_id: doc.id.clone(),
                claim_number: claim.number,
                claim_text: claim.text,
            });
        }
    }
    Ok(batch)
}

/// Ranking order: `logit_1` descending, then patent id and claim number
/// ascending.
pub fn compare_ranked(a: &RankedResult, b: &RankedResult) -> Ordering {
    b.logit_1
        .partial_cmp(&a.logit_1)
        .expect("finite logits")
        .then_with(|| a.patent_id.cmp(&b.patent_id))
        .then_with(|| a.claim_number.cmp(&b.claim_number))
}

/// Sorts scored inputs and assigns 1-based ranks. `scores[i]` belongs to
/// `inputs[i]`.
pub fn order_results(inputs: &[QueryInput], scores: &[ScoreResult]) -> Vec<RankedResult> {
    let mut results: Vec<RankedResult> = inputs
        .iter()
        .zip(scores)
        .map(|(input, score)| RankedResult {
            rank: 0,
            patent_id: input.patent_id.clone(),
            claim_number: input.claim_number,
            logit_1: score.logit_1,
            prob_1: score.prob_1,
        })
        .collect();
    results.sort_by(compare_ranked);
    for (i, r) in results.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    results
}

/// A ranked list and the warnings raised while building it.
#[derive(Debug, Clone, Default)]
pub struct Ranking {
    pub results: Vec<RankedResult>,
    pub warnings: Vec<String>,
}

/// Scores every candidate claim against `description_ip` and returns the
/// best `top_k`.
pub fn rank(
    query_id: &str,
    description_ip: &str,
    candidates: &[PatentDoc],
    mode: ClaimMode,
    scorer: &dyn PairScorer,
    top_k: usize,
    encoder: Option<&Encoder>,
) -> Result<Ranking, RankError> {
    if top_k == 0 {
        return Err(RankError::InvalidTopK);
    }
    let batch = build_query_inputs(query_id, description_ip, candidates, mode, encoder)?;
    let requests: Vec<ScoreRequest> = batch.inputs.iter().map(QueryInput::to_request).collect();
    let scores = scorer.score_batch(&requests)?;
    if scores.len() != requests.len() {
        return Err(RankError::ResultCount {
            expected: requests.len(),
            got: scores.len(),
        });
    }
    let mut results = order_results(&batch.inputs, &scores);
    results.truncate(top_k);
    Ok(Ranking {
        results,
        warnings: batch.warnings,
    })
}

/// One JSON object per result: `{rank, patent_id, claim_number, logit_1, prob_1}`.
pub fn render_jsonl(results: &[RankedResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(r).expect("result serializes"));
        out.push('\n');
    }
    out
}

/// Two-column text table: the reference id, then the ranked patents.
///
/// ```text
/// | Reference patent | Pos. / FTO-patent |
/// |------------------|-------------------|
/// | US9659410B2      | 1.  US9659410B2   |
/// |                  | 2.  US9666108B2   |
/// ```
///
/// A claim number is appended when one patent appears more than once.
pub fn render_table(reference_id: &str, results: &[RankedResult]) -> String {
    let mut per_patent: HashMap<&str, usize> = HashMap::new();
    for r in results {
        *per_patent.entry(r.patent_id.as_str()).or_default() += 1;
    }
    let cells: Vec<String> = results
        .iter()
        .map(|r| {
            let mut cell = format!("{:<4}{}", format!("{}.", r.rank), r.patent_id);
            if per_patent[r.patent_id.as_str()] > 1 {
                let _ = write!(cell, " (claim {})", r.claim_number);
            }
            cell
        })
        .collect();

    const LEFT: &str = "Reference patent";
    const RIGHT: &str = "Pos. / FTO-patent";
    let left = LEFT.len().max(reference_id.len());
    let right = cells.iter().map(String::len).max().unwrap_or(0).max(RIGHT.len());
    let mut out = String::new();
    let _ = writeln!(out, "| {LEFT:<left$} | {RIGHT:<right$} |");
    let _ = writeln!(out, "|{}|{}|", "-".repeat(left + 2), "-".repeat(right + 2));
    if cells.is_empty() {
        let _ = writeln!(out, "| {reference_id:<left$} | {:<right$} |", "");
    }
    for (i, cell) in cells.iter().enumerate() {
        let id = if i == 0 { reference_id } else { "" };
        let _ = writeln!(out, "| {id:<left$} | {cell:<right$} |");
    }
    out
}

//! Balanced pair dataset construction.
//!
//! Every description piece is paired with the independent claim(s) of its own
//! patent (label [`Label::Matched`]). The same pieces and claims are then
//! recombined at random across patents (label [`Label::Mismatched`]) until
//! both labels have the same count.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{independent_claims, Claim, ClaimMode, CorpusError, PatentDoc};
use crate::seed;
use crate::slicer::DescriptionPiece;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PairError {
    #[error("no claims available for patent {0}")]
    MissingClaims(String),
    #[error("negative pairs need claims from at least two patents")]
    NoNegativeSource,
    #[error("invalid validation size: {0}")]
    InvalidSize(String),
}

/// Binary pair label. `Matched` (1) means description piece and claim come
/// from the same patent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    Mismatched,
    Matched,
}

impl Label {
    pub const MATCHED_ID: u8 = 1;
    pub const MISMATCHED_ID: u8 = 0;

    pub fn id(self) -> u8 {
        match self {
            Label::Matched => Self::MATCHED_ID,
            Label::Mismatched => Self::MISMATCHED_ID,
        }
    }
}

impl From<Label> for u8 {
    fn from(label: Label) -> u8 {
        label.id()
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            Label::MATCHED_ID => Ok(Label::Matched),
            Label::MISMATCHED_ID => Ok(Label::Mismatched),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

/// One labeled (description piece, claim) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub desc_patent_id: String,
    pub claim_patent_id: String,
    pub piece_index: usize,
    pub claim_number: u32,
    #[serde(rename = "description")]
    pub description_text: String,
    #[serde(rename = "claim")]
    pub claim_text: String,
    pub label: Label,
}

/// Selected independent claims per patent id.
pub type ClaimSource = BTreeMap<String, Vec<Claim>>;

/// Collects the claims selected by `mode` for each document.
pub fn claim_source(docs: &[PatentDoc], mode: ClaimMode) -> Result<ClaimSource, CorpusError> {
    docs.iter()
        .map(|doc| Ok((doc.id.clone(), independent_claims(doc, mode)?)))
        .collect()
}

fn claims_for<'a>(source: &'a ClaimSource, patent_id: &str) -> Result<&'a [Claim], PairError> {
    match source.get(patent_id) {
        Some(claims) if !claims.is_empty() => Ok(claims),
        _ => Err(PairError::MissingClaims(patent_id.to_string())),
    }
}

fn make_pair(piece: &DescriptionPiece, claim_patent_id: &str, claim: &Claim) -> TrainingPair {
    let label = if piece.patent_id == claim_patent_id {
        Label::Matched
    } else {
        Label::Mismatched
    };
    TrainingPair {
        desc_patent_id: piece.patent_id.clone(),
        claim_patent_id: claim_patent_id.to_string(),
        piece_index: piece.piece_index,
        claim_number: claim.number,
        description_text: piece.text.clone(),
        claim_text: claim.text.clone(),
        label,
    }
}

/// One matched pair per (piece, claim of the piece's patent).
pub fn generate_positive_pairs(
    pieces: &[DescriptionPiece],
    source: &ClaimSource,
) -> Result<Vec<TrainingPair>, PairError> {
    let mut pairs = Vec::new();
    for piece in pieces {
        for claim in claims_for(source, &piece.patent_id)? {
            pairs.push(make_pair(piece, &piece.patent_id, claim));
        }
    }
    Ok(pairs)
}

/// Draws `count` mismatched pairs.
///
/// Pieces are drawn uniformly from `pieces`; claims are drawn uniformly from
/// the claims of the *other* patents that own at least one piece, so every
/// negative reuses text that also appears in a positive pair. Draw `d` uses
/// its own generator derived from `(seed, d)`.
pub fn generate_negative_pairs(
    pieces: &[DescriptionPiece],
    source: &ClaimSource,
    count: usize,
    seed: u64,
) -> Result<Vec<TrainingPair>, PairError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let pool = ClaimPool::new(pieces, source)?;
    Ok((0..count)
        .into_par_iter()
        .map(|draw| {
            let mut rng = seed::rng(seed, "negative", "", draw as u64);
            let piece = &pieces[rng.random_range(0..pieces.len())];
            let (patent_id, claim) = pool.draw_foreign(&piece.patent_id, &mut rng);
            make_pair(piece, patent_id, claim)
        })
        .collect())
}

/// Flattened claim list grouped by patent, for uniform foreign-claim draws.
struct ClaimPool<'a> {
    entries: Vec<(&'a str, &'a Claim)>,
    // patent id -> [start, end) in `entries`
    ranges: BTreeMap<&'a str, (usize, usize)>,
}

impl<'a> ClaimPool<'a> {
    fn new(pieces: &[DescriptionPiece], source: &'a ClaimSource) -> Result<Self, PairError> {
        let owners: HashSet<&str> = pieces.iter().map(|p| p.patent_id.as_str()).collect();
        let mut entries = Vec::new();
        let mut ranges = BTreeMap::new();
        for (patent_id, claims) in source {
            if !owners.contains(patent_id.as_str()) {
                continue;
            }
            let start = entries.len();
            entries.extend(claims.iter().map(|c| (patent_id.as_str(), c)));
            ranges.insert(patent_id.as_str(), (start, entries.len()));
        }
        if let Some(missing) = owners.iter().find(|id| !ranges.contains_key(*id)) {
            return Err(PairError::MissingClaims(missing.to_string()));
        }
        if let Some((id, _)) = ranges.iter().find(|(_, (s, e))| s == e) {
            return Err(PairError::MissingClaims(id.to_string()));
        }
        if ranges.len() < 2 {
            return Err(PairError::NoNegativeSource);
        }
        Ok(ClaimPool { entries, ranges })
    }

    fn draw_foreign<R: Rng>(&self, own: &str, rng: &mut R) -> (&'a str, &'a Claim) {
        let (start, end) = self.ranges[own];
        let own_len = end - start;
        let mut idx = rng.random_range(0..self.entries.len() - own_len);
        if idx >= start {
            idx += own_len;
        }
        self.entries[idx]
    }
}

/// Positives plus an equal number of negatives, shuffled with `seed`.
pub fn build_dataset(
    pieces: &[DescriptionPiece],
    source: &ClaimSource,
    seed: u64,
) -> Result<Vec<TrainingPair>, PairError> {
    let mut pairs = generate_positive_pairs(pieces, source)?;
    let negatives = generate_negative_pairs(pieces, source, pairs.len(), seed)?;
    pairs.extend(negatives);
    pairs.shuffle(&mut seed::rng(seed, "dataset_shuffle", "", 0));
    Ok(pairs)
}

/// Requested size of the validation split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationSize {
    Count(usize),
    Fraction(f64),
}

/// Splits pairs into `(train, validation)` at random. Each half keeps the
/// input order.
pub fn split_validation(
    pairs: &[TrainingPair],
    size: ValidationSize,
    seed: u64,
) -> Result<(Vec<TrainingPair>, Vec<TrainingPair>), PairError> {
    let count = match size {
        ValidationSize::Count(n) => n,
        ValidationSize::Fraction(f) if (0.0..1.0).contains(&f) => (f * pairs.len() as f64).round() as usize,
        ValidationSize::Fraction(f) => return Err(PairError::InvalidSize(format!("fraction {f} outside [0, 1)"))),
    };
    if count > 0 && count >= pairs.len() {
        return Err(PairError::InvalidSize(format!(
            "validation size {count} must be smaller than the {} pairs",
            pairs.len()
        )));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut seed::rng(seed, "validation_split", "", 0));
    let mut held_out = vec![false; pairs.len()];
    for &idx in &order[..count] {
        held_out[idx] = true;
    }
    let mut train = Vec::with_capacity(pairs.len() - count);
    let mut validation = Vec::with_capacity(count);
    for (pair, hold) in pairs.iter().zip(held_out) {
        if hold {
            validation.push(pair.clone());
        } else {
            train.push(pair.clone());
        }
    }
    Ok((train, validation))
}

/// Label histogram `(mismatched, matched)`.
pub fn label_counts(pairs: &[TrainingPair]) -> (usize, usize) {
    let matched = pairs.iter().filter(|p| p.label == Label::Matched).count();
    (pairs.len() - matched, matched)
}

pub fn write_pairs(path: impl AsRef<Path>, pairs: &[TrainingPair]) -> crate::Result<()> {
    crate::jsonl::write_file(path, pairs)
}

pub fn read_pairs(path: impl AsRef<Path>) -> crate::Result<Vec<TrainingPair>> {
    crate::jsonl::read_file(path, "pair")
}

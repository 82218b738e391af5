//! Slicing of patent descriptions into word-bounded pieces.
//!
//! Piece lengths are drawn uniformly from `[min_words, max_words]`. A tail
//! shorter than `min_words` is merged into the piece before it, so no text is
//! dropped and the final piece may hold up to `max_words + min_words - 1`
//! words. A description shorter than `min_words` becomes a single piece.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::PatentDoc;
use crate::seed;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SliceError {
    #[error("patent {0} has an empty description")]
    EmptyDescription(String),
    #[error("invalid slice bounds [{min_words}, {max_words}]")]
    InvalidBounds { min_words: usize, max_words: usize },
}

/// Inclusive word-count bounds for description pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceBounds {
    pub min_words: usize,
    pub max_words: usize,
}

impl Default for SliceBounds {
    fn default() -> Self {
        SliceBounds {
            min_words: 100,
            max_words: 200,
        }
    }
}

impl SliceBounds {
    pub fn new(min_words: usize, max_words: usize) -> Result<Self, SliceError> {
        let bounds = SliceBounds { min_words, max_words };
        bounds.validate()?;
        Ok(bounds)
    }

    pub fn validate(&self) -> Result<(), SliceError> {
        if self.min_words == 0 || self.min_words > self.max_words {
            return Err(SliceError::InvalidBounds {
                min_words: self.min_words,
                max_words: self.max_words,
            });
        }
        Ok(())
    }
}

/// One slice of a patent description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptionPiece {
    pub patent_id: String,
    pub piece_index: usize,
    pub text: String,
    #[serde(skip)]
    pub word_count: usize,
}

/// Word counts of consecutive pieces for a description of `total` words.
///
/// `rng` supplies the uniform length draws; the returned counts always sum
/// to `total`.
pub fn piece_lengths<R: Rng>(total: usize, bounds: SliceBounds, rng: &mut R) -> Vec<usize> {
    let mut lengths = Vec::new();
    let mut remaining = total;
    while remaining > 0 {
        let drawn = rng.random_range(bounds.min_words..=bounds.max_words);
        if drawn >= remaining {
            lengths.push(remaining);
            break;
        }
        let leftover = remaining - drawn;
        if leftover < bounds.min_words {
            lengths.push(remaining);
            break;
        }
        lengths.push(drawn);
        remaining = leftover;
    }
    lengths
}

/// Slices the description of `doc`.
///
/// The generator is derived from `(seed, doc.id)`, so the result does not
/// depend on which other documents are sliced or in what order.
pub fn slice_description(doc: &PatentDoc, bounds: SliceBounds, seed: u64) -> Result<Vec<DescriptionPiece>, SliceError> {
    bounds.validate()?;
    let words: Vec<&str> = doc.description.split_whitespace().collect();
    if words.is_empty() {
        return Err(SliceError::EmptyDescription(doc.id.clone()));
    }
    let mut rng = seed::rng(seed, "slice", &doc.id, 0);
    let mut start = 0;
    let pieces = piece_lengths(words.len(), bounds, &mut rng)
        .into_iter()
        .enumerate()
        .map(|(piece_index, len)| {
            let text = words[start..start + len].join(" ");
            start += len;
            DescriptionPiece {
                patent_id: doc.id.clone(),
                piece_index,
                text,
                word_count: len,
            }
        })
        .collect();
    Ok(pieces)
}

/// Slices every document in parallel; pieces follow corpus order.
pub fn slice_corpus(docs: &[PatentDoc], bounds: SliceBounds, seed: u64) -> Result<Vec<DescriptionPiece>, SliceError> {
    let per_doc: Vec<Vec<DescriptionPiece>> = docs
        .par_iter()
        .map(|doc| slice_description(doc, bounds, seed))
        .collect::<Result<_, _>>()?;
    Ok(per_doc.into_iter().flatten().collect())
}

/// Writes the pieces dump: `{patent_id, piece_index, text}` per line.
pub fn write_pieces(path: impl AsRef<Path>, pieces: &[DescriptionPiece]) -> crate::Result<()> {
    crate::jsonl::write_file(path, pieces)
}

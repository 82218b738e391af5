//! WordPiece tokenization and fixed-length pair encoding.
//!
//! A pair `(a, b)` is laid out as
//!
//! ```text
//! [CLS] a1 .. an [SEP] b1 .. bm [SEP] [PAD] .. [PAD]
//! segment: 0 for [CLS]..first [SEP], 1 for b1..second [SEP], 0 for padding
//! mask:    1 for every non-pad position
//! ```
//!
//! and padded or truncated to exactly `max_len` ids. Over-length pairs are cut
//! longest-first: the last token of the currently longer segment is dropped
//! (the second segment on ties) until the content fits.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const CONTINUATION_PREFIX: &str = "##";

/// Default sequence length; stays below the 512-token model limit.
pub const DEFAULT_MAX_LEN: usize = 500;
/// `[CLS]` plus two `[SEP]`.
pub const SPECIAL_TOKENS_PER_PAIR: usize = 3;
/// Words longer than this (in chars) map straight to `[UNK]`.
const MAX_CHARS_PER_WORD: usize = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("cannot read vocabulary {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("vocabulary is empty")]
    EmptyVocab,
    #[error("vocabulary lacks special token {0}")]
    MissingSpecial(String),
    #[error("duplicate vocabulary token {0:?}")]
    DuplicateToken(String),
    #[error("{0} segment produced no tokens")]
    EmptySegment(&'static str),
    #[error("max_len {0} is too small (need at least 5)")]
    MaxLenTooSmall(usize),
}

/// Token table with located special tokens. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    pub pad_id: u32,
    pub unk_id: u32,
    pub cls_id: u32,
    pub sep_id: u32,
}

impl Vocabulary {
    /// Builds a vocabulary where a token's id is its position.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, EncodeError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(EncodeError::EmptyVocab);
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (id, token) in tokens.iter().enumerate() {
            if ids.insert(token.clone(), id as u32).is_some() {
                return Err(EncodeError::DuplicateToken(token.clone()));
            }
        }
        let special = |name: &str| {
            ids.get(name)
                .copied()
                .ok_or_else(|| EncodeError::MissingSpecial(name.to_string()))
        };
        Ok(Vocabulary {
            pad_id: special(PAD)?,
            unk_id: special(UNK)?,
            cls_id: special(CLS)?,
            sep_id: special(SEP)?,
            tokens,
            ids,
        })
    }

    /// Parses `vocab.txt` text: one token per line, line number = id.
    pub fn parse(text: &str) -> Result<Self, EncodeError> {
        Self::from_tokens(text.lines())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn is_special(&self, id: u32) -> bool {
        id == self.pad_id || id == self.unk_id || id == self.cls_id || id == self.sep_id
    }
}

/// Loads a `vocab.txt` file.
pub fn load_vocabulary(path: impl AsRef<Path>) -> Result<Vocabulary, EncodeError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| EncodeError::Read {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    Vocabulary::parse(&text)
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c as u32,
            0x00A1 | 0x00A7 | 0x00AB | 0x00B6 | 0x00B7 | 0x00BB | 0x00BF
            | 0x2010..=0x2027 | 0x2030..=0x205E | 0x3001..=0x3003 | 0x3008..=0x3011)
}

fn is_control(c: char) -> bool {
    c.is_control() && !c.is_whitespace()
}

/// Lowercases, drops control characters and splits on whitespace and
/// punctuation. Each punctuation character becomes its own token.
pub fn basic_tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if is_control(c) || c == '\u{FFFD}' || c == '\0' {
            continue;
        }
        if c.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if is_punctuation(c) {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(c.to_string());
        } else {
            current.extend(c.to_lowercase());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Greedy longest-match-first segmentation of one word. A word without a
/// complete segmentation yields `None`.
fn wordpiece_word<'v>(word: &str, vocab: &'v Vocabulary) -> Option<Vec<&'v str>> {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() > MAX_CHARS_PER_WORD {
        return None;
    }
    let mut pieces = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut end = chars.len();
        let mut found = None;
        while start < end {
            let mut candidate: String = chars[start..end].iter().collect();
            if start > 0 {
                candidate.insert_str(0, CONTINUATION_PREFIX);
            }
            if let Some(id) = vocab.id(&candidate) {
                found = Some(id);
                break;
            }
            end -= 1;
        }
        let id = found?;
        pieces.push(vocab.token(id).expect("id from vocab"));
        start = end;
    }
    Some(pieces)
}

/// Full tokenization: basic splitting followed by WordPiece.
pub fn wordpiece_tokenize(text: &str, vocab: &Vocabulary) -> Vec<String> {
    let mut out = Vec::new();
    for word in basic_tokenize(text) {
        match wordpiece_word(&word, vocab) {
            Some(pieces) => out.extend(pieces.into_iter().map(str::to_string)),
            None => out.push(UNK.to_string()),
        }
    }
    out
}

fn wordpiece_ids(text: &str, vocab: &Vocabulary) -> Vec<u32> {
    let mut out = Vec::new();
    for word in basic_tokenize(text) {
        match wordpiece_word(&word, vocab) {
            Some(pieces) => out.extend(pieces.into_iter().filter_map(|p| vocab.id(p))),
            None => out.push(vocab.unk_id),
        }
    }
    out
}

/// A fixed-length model input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedSequence {
    pub token_ids: Vec<u32>,
    pub segment_ids: Vec<u8>,
    pub attention_mask: Vec<u8>,
    pub label: Option<u8>,
}

/// An encoded pair plus how many content tokens truncation removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub sequence: EncodedSequence,
    pub truncated_tokens: usize,
}

/// Lengths `(a, b)` after longest-first truncation to `budget` tokens.
pub fn truncate_longest_first(mut a: usize, mut b: usize, budget: usize) -> (usize, usize) {
    while a + b > budget {
        if a > b {
            a -= 1;
        } else {
            b -= 1;
        }
    }
    (a, b)
}

/// Pair encoder bound to a vocabulary and sequence length.
#[derive(Debug, Clone)]
pub struct Encoder {
    vocab: Vocabulary,
    max_len: usize,
}

impl Encoder {
    pub fn new(vocab: Vocabulary, max_len: usize) -> Result<Self, EncodeError> {
        if max_len < SPECIAL_TOKENS_PER_PAIR + 2 {
            return Err(EncodeError::MaxLenTooSmall(max_len));
        }
        Ok(Encoder { vocab, max_len })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Content tokens available after the special tokens.
    pub fn budget(&self) -> usize {
        self.max_len - SPECIAL_TOKENS_PER_PAIR
    }

    /// Whether the pair would be cut to fit.
    pub fn needs_truncation(&self, text_a: &str, text_b: &str) -> bool {
        wordpiece_ids(text_a, &self.vocab).len() + wordpiece_ids(text_b, &self.vocab).len() > self.budget()
    }

    pub fn encode_pair(&self, text_a: &str, text_b: &str) -> Result<Encoded, EncodeError> {
        let mut a = wordpiece_ids(text_a, &self.vocab);
        let mut b = wordpiece_ids(text_b, &self.vocab);
        if a.is_empty() {
            return Err(EncodeError::EmptySegment("first"));
        }
        if b.is_empty() {
            return Err(EncodeError::EmptySegment("second"));
        }
        let (keep_a, keep_b) = truncate_longest_first(a.len(), b.len(), self.budget());
        let truncated_tokens = a.len() + b.len() - keep_a - keep_b;
        a.truncate(keep_a);
        b.truncate(keep_b);

        let v = &self.vocab;
        let mut token_ids = Vec::with_capacity(self.max_len);
        token_ids.push(v.cls_id);
        token_ids.extend(&a);
        token_ids.push(v.sep_id);
        token_ids.extend(&b);
        token_ids.push(v.sep_id);
        let used = token_ids.len();
        token_ids.resize(self.max_len, v.pad_id);

        let mut segment_ids = vec![0u8; self.max_len];
        segment_ids[keep_a + 2..used].fill(1);
        let mut attention_mask = vec![0u8; self.max_len];
        attention_mask[..used].fill(1);

        Ok(Encoded {
            sequence: EncodedSequence {
                token_ids,
                segment_ids,
                attention_mask,
                label: None,
            },
            truncated_tokens,
        })
    }

    /// Tokens of the non-special, non-pad positions.
    pub fn decode_content(&self, seq: &EncodedSequence) -> Vec<String> {
        seq.token_ids
            .iter()
            .filter(|&&id| id != self.vocab.pad_id && id != self.vocab.cls_id && id != self.vocab.sep_id)
            .filter_map(|&id| self.vocab.token(id).map(str::to_string))
            .collect()
    }
}

/// Convenience wrapper matching the one-shot call shape.
pub fn encode_pair(
    text_a: &str,
    text_b: &str,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<EncodedSequence, EncodeError> {
    Ok(Encoder::new(vocab.clone(), max_len)?
        .encode_pair(text_a, text_b)?
        .sequence)
}

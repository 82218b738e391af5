//! Patent corpus ingestion, filtering and disjoint splitting.
//!
//! The corpus file holds one JSON object per line:
//!
//! ```text
//! {"id": "US9659410B2", "kind_code": "B2", "language": "en",
//!  "classifications": ["G06T1/60"], "abstract": "...", "description": "...",
//!  "claims": [{"number": 1, "text": "...", "is_independent": true}]}
//! ```
//!
//! Unknown keys are ignored. When `is_independent` is missing from a claim it
//! is inferred from back-references such as "according to claim 1".

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus file not found: {0}")]
    FileNotFound(String),
    #[error("cannot read corpus {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed record at line {0}: {1}")]
    MalformedRecord(usize, String),
    #[error("duplicate patent id {0}")]
    DuplicateId(String),
    #[error("unknown patent id {0}")]
    UnknownId(String),
    #[error("search fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("search count {count} exceeds corpus size {size}")]
    InvalidCount { count: usize, size: usize },
    #[error("patent {0} has no independent claim")]
    NoIndependentClaim(String),
}

/// One claim of a patent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub number: u32,
    pub text: String,
    pub is_independent: bool,
}

/// One patent publication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatentDoc {
    pub id: String,
    pub kind_code: String,
    pub language: String,
    pub classifications: Vec<String>,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub description: String,
    pub claims: Vec<Claim>,
}

/// Which independent claims of a patent take part in pairing or search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimMode {
    /// Only the lowest-numbered independent claim.
    #[default]
    FirstOnly,
    /// Every independent claim, in number order.
    All,
}

impl std::str::FromStr for ClaimMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first_only" | "first-only" | "first" => Ok(ClaimMode::FirstOnly),
            "all" => Ok(ClaimMode::All),
            other => Err(format!("unknown claim mode {other:?} (expected first_only or all)")),
        }
    }
}

impl std::fmt::Display for ClaimMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClaimMode::FirstOnly => "first_only",
            ClaimMode::All => "all",
        })
    }
}

/// Outcome of [`load_corpus`].
#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub docs: Vec<PatentDoc>,
    /// `(line number, reason)` for every record dropped in non-strict mode.
    pub skipped: Vec<(usize, String)>,
    /// Non-blank lines seen. Always `docs.len() + skipped.len()`.
    pub total_records: usize,
}

#[derive(Deserialize)]
struct RawClaim {
    number: i64,
    text: String,
    #[serde(default)]
    is_independent: Option<bool>,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    kind_code: String,
    language: String,
    classifications: Vec<String>,
    #[serde(rename = "abstract")]
    abstract_text: String,
    description: String,
    claims: Vec<RawClaim>,
}

const REQUIRED_FIELDS: [&str; 7] = [
    "id",
    "kind_code",
    "language",
    "classifications",
    "abstract",
    "description",
    "claims",
];

const BACK_REFERENCES: [&str; 6] = [
    "according to claim",
    "according to any",
    "as claimed in claim",
    "as recited in claim",
    "of claim",
    "in claim",
];

/// Heuristic used only when a record omits `is_independent`: a claim that
/// refers back to another claim is dependent.
pub fn looks_dependent(text: &str) -> bool {
    let lower = text.to_lowercase();
    BACK_REFERENCES.iter().any(|phrase| lower.contains(phrase))
}

/// Parses and validates one corpus line.
pub fn parse_record(line: &str) -> Result<PatentDoc, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid json: {e}"))?;
    let object = value.as_object().ok_or("record is not a json object")?;
    for field in REQUIRED_FIELDS {
        if !object.contains_key(field) {
            return Err(format!("missing field {field}"));
        }
    }
    let raw: RawRecord = serde_json::from_value(value).map_err(|e| e.to_string())?;

    if raw.id.trim().is_empty() {
        return Err("empty id".to_string());
    }
    if raw.claims.is_empty() {
        return Err("empty claims".to_string());
    }
    let mut claims = Vec::with_capacity(raw.claims.len());
    let mut previous = 0i64;
    for claim in raw.claims {
        if claim.number <= 0 || claim.number > i64::from(u32::MAX) {
            return Err(format!("claim number {} is not a positive integer", claim.number));
        }
        if claim.number <= previous {
            return Err(format!(
                "claim numbers not strictly increasing ({} after {previous})",
                claim.number
            ));
        }
        previous = claim.number;
        if claim.text.trim().is_empty() {
            return Err(format!("claim {} has empty text", claim.number));
        }
        let is_independent = claim.is_independent.unwrap_or_else(|| !looks_dependent(&claim.text));
        claims.push(Claim {
            number: claim.number as u32,
            text: claim.text,
            is_independent,
        });
    }

    Ok(PatentDoc {
        id: raw.id,
        kind_code: raw.kind_code,
        language: raw.language,
        classifications: raw.classifications,
        abstract_text: raw.abstract_text,
        description: raw.description,
        claims,
    })
}

/// Parses corpus text. Records are validated in parallel; output follows
/// line order.
pub fn parse_corpus(text: &str, strict: bool) -> Result<LoadReport, CorpusError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(idx, line)| (idx + 1, line))
        .collect();
    let parsed: Vec<(usize, Result<PatentDoc, String>)> = lines
        .par_iter()
        .map(|&(line_no, line)| (line_no, parse_record(line)))
        .collect();

    let mut report = LoadReport {
        total_records: parsed.len(),
        ..LoadReport::default()
    };
    let mut seen = HashSet::new();
    for (line_no, result) in parsed {
        match result {
            Ok(doc) => {
                if !seen.insert(doc.id.clone()) {
                    return Err(CorpusError::DuplicateId(doc.id));
                }
                report.docs.push(doc);
            }
            Err(reason) if strict => return Err(CorpusError::MalformedRecord(line_no, reason)),
            Err(reason) => report.skipped.push((line_no, reason)),
        }
    }
    Ok(report)
}

/// Loads a JSON-lines corpus file.
///
/// In strict mode the first invalid record aborts with
/// [`CorpusError::MalformedRecord`]; otherwise invalid records are skipped
/// and listed in the report. Duplicate ids abort in both modes.
pub fn load_corpus(path: impl AsRef<Path>, strict: bool) -> Result<LoadReport, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| match source.kind() {
        io::ErrorKind::NotFound => CorpusError::FileNotFound(path.display().to_string()),
        _ => CorpusError::Read {
            path: path.display().to_string(),
            source,
        },
    })?;
    parse_corpus(&text, strict)
}

/// Selection criteria for [`filter_corpus`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusFilter {
    /// Classification prefix such as `G06T1`; empty matches every document.
    pub class_prefix: String,
    /// Accepted language codes; empty accepts any.
    pub languages: BTreeSet<String>,
    /// Accepted kind codes; empty accepts any.
    pub kinds: BTreeSet<String>,
}

impl CorpusFilter {
    pub fn matches(&self, doc: &PatentDoc) -> bool {
        let class_ok = self.class_prefix.is_empty()
            || doc
                .classifications
                .iter()
                .any(|code| code.starts_with(&self.class_prefix));
        let language_ok = self.languages.is_empty() || self.languages.contains(&doc.language);
        let kind_ok = self.kinds.is_empty() || self.kinds.contains(&doc.kind_code);
        class_ok && language_ok && kind_ok
    }
}

/// Keeps the documents accepted by `filter`, in order.
pub fn filter_corpus(docs: &[PatentDoc], filter: &CorpusFilter) -> Vec<PatentDoc> {
    docs.iter().filter(|doc| filter.matches(doc)).cloned().collect()
}

/// How the search half of a disjoint split is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchSelection {
    Ids(BTreeSet<String>),
    Fraction(f64),
    Count(usize),
}

/// Partitions `docs` into `(train, search)`.
///
/// Both halves keep corpus order. Random selections shuffle indices with a
/// generator derived from `seed`, so identical inputs give identical splits.
pub fn split_disjoint(
    docs: &[PatentDoc],
    selection: &SearchSelection,
    seed: u64,
) -> Result<(Vec<PatentDoc>, Vec<PatentDoc>), CorpusError> {
    let in_search: Vec<bool> = match selection {
        SearchSelection::Ids(ids) => {
            let known: HashSet<&str> = docs.iter().map(|d| d.id.as_str()).collect();
            if let Some(missing) = ids.iter().find(|id| !known.contains(id.as_str())) {
                return Err(CorpusError::UnknownId(missing.clone()));
            }
            docs.iter().map(|d| ids.contains(&d.id)).collect()
        }
        SearchSelection::Fraction(fraction) => {
            if !(*fraction > 0.0 && *fraction < 1.0) {
                return Err(CorpusError::InvalidFraction(*fraction));
            }
            let count = (*fraction * docs.len() as f64).round() as usize;
            random_mask(docs.len(), count, seed)
        }
        SearchSelection::Count(count) => {
            if *count > docs.len() {
                return Err(CorpusError::InvalidCount {
                    count: *count,
                    size: docs.len(),
                });
            }
            random_mask(docs.len(), *count, seed)
        }
    };

    let mut train = Vec::new();
    let mut search = Vec::new();
    for (doc, searched) in docs.iter().zip(in_search) {
        if searched {
            search.push(doc.clone());
        } else {
            train.push(doc.clone());
        }
    }
    Ok((train, search))
}

fn random_mask(len: usize, count: usize, seed: u64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut seed::rng(seed, "split_disjoint", "", 0));
    let mut mask = vec![false; len];
    for &idx in &order[..count] {
        mask[idx] = true;
    }
    mask
}

/// Independent claims of `doc` selected by `mode`, lowest number first.
pub fn independent_claims(doc: &PatentDoc, mode: ClaimMode) -> Result<Vec<Claim>, CorpusError> {
    let mut claims: Vec<&Claim> = doc.claims.iter().filter(|c| c.is_independent).collect();
    if claims.is_empty() {
        return Err(CorpusError::NoIndependentClaim(doc.id.clone()));
    }
    claims.sort_by_key(|c| c.number);
    if mode == ClaimMode::FirstOnly {
        claims.truncate(1);
    }
    Ok(claims.into_iter().cloned().collect())
}

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::encoder::basic_tokenize;

pub const N_FEATURES: usize = 5;

/// Feature order of the baseline model. Changing it requires a new model
/// file version.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "idf_cosine",
    "claim_containment",
    "jaccard",
    "log_length_ratio",
    "overlap_count",
];

/// Document frequencies of the training texts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdfTable {
    pub n_docs: u64,
    pub df: BTreeMap<String, u64>,
}

impl IdfTable {
    /// Counts each term once per text.
    pub fn from_texts<'a, I>(texts: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut table = IdfTable::default();
        for text in texts {
            table.n_docs += 1;
            for term in term_set(text) {
                *table.df.entry(term).or_insert(0) += 1;
            }
        }
        table
    }

    /// Smoothed idf: `ln((N + 1) / (df + 1)) + 1`.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0);
        ((self.n_docs as f64 + 1.0) / (df as f64 + 1.0)).ln() + 1.0
    }
}

/// Lowercased word tokens; bare punctuation is dropped.
pub fn terms(text: &str) -> Vec<String> {
    basic_tokenize(text)
        .into_iter()
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .collect()
}

fn term_set(text: &str) -> BTreeSet<String> {
    terms(text).into_iter().collect()
}

fn counts(terms: &[String]) -> BTreeMap<&str, f64> {
    let mut out = BTreeMap::new();
    for t in terms {
        *out.entry(t.as_str()).or_insert(0.0) += 1.0;
    }
    out
}

/// Raw (unnormalized) features of a (description, claim) pair, in
/// [`FEATURE_NAMES`] order.
pub fn extract_features(desc_text: &str, claim_text: &str, idf: &IdfTable) -> [f64; N_FEATURES] {
    let desc = terms(desc_text);
    let claim = terms(claim_text);
    if desc.is_empty() || claim.is_empty() {
        return [0.0; N_FEATURES];
    }

    let desc_tf = counts(&desc);
    let claim_tf = counts(&claim);
    let weight = |term: &str, tf: f64| tf * idf.idf(term);
    let norm = |tf: &BTreeMap<&str, f64>| tf.iter().map(|(t, c)| weight(t, *c).powi(2)).sum::<f64>().sqrt();
    // ordered maps: float sums must not depend on hash iteration order
    let shared: Vec<&str> = claim_tf.keys().filter(|t| desc_tf.contains_key(*t)).copied().collect();
    let dot: f64 = shared
        .iter()
        .map(|t| weight(t, desc_tf[t]) * weight(t, claim_tf[t]))
        .sum();
    let cosine = dot / (norm(&desc_tf) * norm(&claim_tf));

    let overlap = shared.len() as f64;
    let union = (desc_tf.len() + claim_tf.len()) as f64 - overlap;
    [
        cosine,
        overlap / claim_tf.len() as f64,
        overlap / union,
        (desc.len() as f64 / claim.len() as f64).ln(),
        overlap,
    ]
}

//! Synthetic patent corpora with planted topic affinity.
//!
//! Every patent owns a private set of topic words; a shared pool of
//! boilerplate words is common to all. Abstract, description and first claim
//! are mostly topic words, so a patent's abstract overlaps its own claim far
//! more than any other claim.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{Claim, PatentDoc};
use crate::seed;

/// Share of topic words in generated text.
const TOPIC_SHARE: f64 = 0.6;
const ABSTRACT_WORDS: usize = 50;
const CLAIM_WORDS: usize = 25;
const DEPENDENT_CLAIM_WORDS: usize = 10;
const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "nu", "pe", "ri", "sa", "to", "vu", "ze", "bo", "da", "fi", "gu", "ha", "je",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_patents: usize,
    pub topic_vocab_size: usize,
    pub shared_vocab_size: usize,
    pub words_per_description: usize,
    pub seed: u64,
}

impl SynthSpec {
    fn validate(&self) -> Result<(), EvalError> {
        if self.n_patents < 2 {
            return Err(EvalError::InvalidSpec("n_patents must be at least 2".into()));
        }
        if self.topic_vocab_size == 0 || self.shared_vocab_size == 0 || self.words_per_description == 0 {
            return Err(EvalError::InvalidSpec(
                "vocabulary sizes and description length must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Bijective base-16 syllable spelling; distinct numbers give distinct words.
fn spell(mut n: usize, suffix: &str) -> String {
    let mut syllables = Vec::new();
    loop {
        syllables.push(SYLLABLES[n % SYLLABLES.len()]);
        n /= SYLLABLES.len();
        if n == 0 {
            break;
        }
        n -= 1;
    }
    syllables.reverse();
    let mut word = syllables.concat();
    word.push_str(suffix);
    word
}

/// Topic word `k` of patent `doc`.
pub fn topic_word(doc: usize, k: usize, topic_vocab_size: usize) -> String {
    spell(doc * topic_vocab_size + k, "x")
}

/// Shared boilerplate word `k`.
pub fn shared_word(k: usize) -> String {
    spell(k, "m")
}

fn words<R: Rng>(rng: &mut R, doc: usize, spec: &SynthSpec, count: usize) -> Vec<String> {
    (0..count)
        .map(|_| {
            if rng.random_bool(TOPIC_SHARE) {
                topic_word(doc, rng.random_range(0..spec.topic_vocab_size), spec.topic_vocab_size)
            } else {
                shared_word(rng.random_range(0..spec.shared_vocab_size))
            }
        })
        .collect()
}

/// Generates `spec.n_patents` documents. Output depends only on `spec`.
pub fn synth_corpus(spec: &SynthSpec) -> Result<Vec<PatentDoc>, EvalError> {
    spec.validate()?;
    Ok((0..spec.n_patents)
        .map(|i| {
            let mut rng = seed::rng(spec.seed, "synth", "", i as u64);
            let abstract_text = words(&mut rng, i, spec, ABSTRACT_WORDS).join(" ");
            let description = words(&mut rng, i, spec, spec.words_per_description).join(" ");
            let first = format!(
                "A system comprising {}.",
                words(&mut rng, i, spec, CLAIM_WORDS).join(" ")
            );
            let second = format!(
                "The system according to claim 1, wherein {}.",
                words(&mut rng, i, spec, DEPENDENT_CLAIM_WORDS).join(" ")
            );
            PatentDoc {
                id: format!("SY{:07}B2", i + 1),
                kind_code: "B2".into(),
                language: "en".into(),
                classifications: vec!["G06T1/60".into()],
                abstract_text,
                description,
                claims: vec![
                    Claim {
                        number: 1,
                        text: first,
                        is_independent: true,
                    },
                    Claim {
                        number: 2,
                        text: second,
                        is_independent: false,
                    },
                ],
            }
        })
        .collect())
}

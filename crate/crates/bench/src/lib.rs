//! Fixtures shared by the criterion benchmarks.

use ftopipe_core::eval::synth_corpus;
use ftopipe_core::{PatentDoc, SynthSpec};

/// A deterministic synthetic corpus of `n` patents with 1,500-word descriptions.
pub fn corpus(n: usize) -> Vec<PatentDoc> {
    synth_corpus(&SynthSpec {
        n_patents: n,
        topic_vocab_size: 40,
        shared_vocab_size: 300,
        words_per_description: 1500,
        seed: 17,
    })
    .expect("valid spec")
}

/// A vocabulary covering every word of `docs` plus the special tokens.
pub fn vocab_for(docs: &[PatentDoc]) -> ftopipe_core::Vocabulary {
    let mut tokens: Vec<String> = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", ".", ","]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut words: Vec<String> = docs
        .iter()
        .flat_map(|d| {
            let mut text = d.description.clone();
            for c in &d.claims {
                text.push(' ');
                text.push_str(&c.text);
            }
            ftopipe_core::encoder::basic_tokenize(&text)
        })
        .collect();
    words.sort();
    words.dedup();
    tokens.extend(words.into_iter().filter(|w| w != "." && w != ","));
    ftopipe_core::Vocabulary::from_tokens(tokens).expect("valid vocabulary")
}

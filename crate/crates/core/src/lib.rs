//! Freedom-to-operate (FTO) patent claim ranking.
//!
//! The pipeline turns a patent corpus into supervised training pairs and uses
//! a pair scorer to rank candidate independent claims against a short
//! invention description:
//!
//! 1. [`corpus`] loads, filters and splits JSON-lines patent records.
//! 2. [`slicer`] cuts each description into word-bounded pieces.
//! 3. [`pairgen`] pairs pieces with independent claims of the same patent
//!    (matched) and of other patents (mismatched), in equal numbers.
//! 4. [`encoder`] turns a text pair into a fixed-length
//!    `[CLS] a [SEP] b [SEP] [PAD]...` token sequence.
//! 5. [`scorer`] produces two logits per pair, either from the built-in
//!    lexical baseline or from an external process speaking a JSON-lines
//!    protocol.
//! 6. [`ranker`] orders candidate claims by the matched-label logit.
//! 7. [`eval`] runs the self-retrieval experiment and computes metrics, and
//!    can synthesize corpora with planted topic affinity.

pub mod corpus;
pub mod encoder;
pub mod eval;
pub mod jsonl;
pub mod pairgen;
pub mod ranker;
pub mod scorer;
pub mod seed;
pub mod slicer;

mod error;

pub use corpus::{Claim, ClaimMode, CorpusFilter, PatentDoc};
pub use encoder::{EncodedSequence, Encoder, Vocabulary};
pub use error::{Error, Result};
pub use eval::{EvalReport, ExperimentConfig, SynthSpec};
pub use pairgen::{Label, TrainingPair};
pub use ranker::{QueryInput, RankedResult};
pub use scorer::{BaselineModel, PairScorer, ScoreRequest, ScoreResult};
pub use slicer::{DescriptionPiece, SliceBounds};

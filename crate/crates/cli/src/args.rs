use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use ftopipe_core::ClaimMode;

/// Freedom-to-operate patent claim ranking pipeline.
#[derive(Debug, Parser)]
#[command(name = "ftopipe", version, args_override_self = true)]
pub struct Cli {
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, env = "FTOPIPE_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// JSON file of flag values for the subcommand, either flat
    /// (`{"seed": 7}`) or keyed by subcommand (`{"pairs": {"seed": 7}}`).
    /// Explicit flags win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus file and optionally write the filtered documents.
    Ingest(IngestArgs),
    /// Slice patent descriptions into word-bounded pieces.
    Slice(SliceArgs),
    /// Build the balanced pair dataset and a validation split.
    Pairs(PairsArgs),
    /// Encode a pair file into fixed-length token id sequences.
    Encode(EncodeArgs),
    /// Train the lexical baseline scorer on a pair file.
    TrainBaseline(TrainArgs),
    /// Rank the claims of a candidate pool against one invention description.
    Rank(RankArgs),
    /// Run a self-retrieval experiment from a JSON experiment file.
    Eval(EvalArgs),
    /// Write a synthetic corpus with planted topic affinity.
    Synth(SynthArgs),
}

pub const SUBCOMMANDS: [&str; 8] = [
    "ingest",
    "slice",
    "pairs",
    "encode",
    "train-baseline",
    "rank",
    "eval",
    "synth",
];

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus file (JSON-lines, one patent per line).
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    /// Abort on the first malformed record instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// Keep documents with a classification starting with this prefix.
    #[arg(long, default_value = "")]
    pub class_prefix: String,
    /// Accepted language code; repeatable. Default: any.
    #[arg(long = "language", value_name = "CODE")]
    pub languages: Vec<String>,
    /// Accepted kind code; repeatable. Default: any.
    #[arg(long = "kind", value_name = "CODE")]
    pub kinds: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SliceBoundsArgs {
    /// Minimum words per description piece.
    #[arg(long, default_value_t = 100)]
    pub min_words: usize,
    /// Maximum words per description piece.
    #[arg(long, default_value_t = 200)]
    pub max_words: usize,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Write the accepted, filtered documents here.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SliceArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub bounds: SliceBoundsArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pieces file: {patent_id, piece_index, text} per line.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ClaimModeArg {
    FirstOnly,
    All,
}

impl From<ClaimModeArg> for ClaimMode {
    fn from(mode: ClaimModeArg) -> Self {
        match mode {
            ClaimModeArg::FirstOnly => ClaimMode::FirstOnly,
            ClaimModeArg::All => ClaimMode::All,
        }
    }
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub bounds: SliceBoundsArgs,
    /// Independent claims paired with each piece.
    #[arg(long, value_enum, default_value = "first-only")]
    pub claim_mode: ClaimModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Share of pairs held out for validation, in [0, 1).
    #[arg(long, default_value_t = 0.125, conflicts_with = "validation_count")]
    pub validation_fraction: f64,
    /// Exact number of pairs held out for validation.
    #[arg(long)]
    pub validation_count: Option<usize>,
    /// Training pairs file.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Validation pairs file. Default: <out stem>.validation.jsonl.
    #[arg(long, value_name = "PATH")]
    pub validation_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Pair file to encode.
    #[arg(long, value_name = "PATH")]
    pub pairs: PathBuf,
    /// WordPiece vocabulary, one token per line.
    #[arg(long, value_name = "PATH")]
    pub vocab: PathBuf,
    /// Sequence length including [CLS] and both [SEP].
    #[arg(long, default_value_t = 500)]
    pub max_len: usize,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "PATH")]
    pub pairs: PathBuf,
    /// Optional validation pair file for reporting accuracy.
    #[arg(long, value_name = "PATH")]
    pub validation: Option<PathBuf>,
    /// Full-batch gradient descent epochs.
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    /// Gradient descent step size.
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model file to write.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScorerArg {
    Baseline,
    External,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Table,
    Jsonl,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Text file holding the invention description.
    #[arg(long, value_name = "PATH")]
    pub query_abstract: PathBuf,
    /// Query id shown in the table. Default: the file stem.
    #[arg(long)]
    pub query_id: Option<String>,
    /// Candidate corpus.
    #[arg(long, value_name = "PATH")]
    pub pool: PathBuf,
    #[arg(long)]
    pub strict: bool,
    #[arg(long, value_enum, default_value = "baseline")]
    pub scorer: ScorerArg,
    /// Baseline model file (with --scorer baseline).
    #[arg(long, value_name = "PATH", required_if_eq("scorer", "baseline"))]
    pub model: Option<PathBuf>,
    /// Scorer command line (with --scorer external), e.g. "python serve.py model/".
    #[arg(long, value_name = "CMD", required_if_eq("scorer", "external"))]
    pub external_cmd: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    #[arg(long, value_enum, default_value = "first-only")]
    pub claim_mode: ClaimModeArg,
    #[arg(long, value_enum, default_value = "table")]
    pub format: FormatArg,
    /// Vocabulary for exact over-length warnings.
    #[arg(long, value_name = "PATH")]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub max_len: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Experiment description (JSON).
    #[arg(long, value_name = "PATH")]
    pub experiment: PathBuf,
    /// Directory for config echo, pair files, model, report and tables.
    #[arg(long, value_name = "PATH")]
    pub out_dir: PathBuf,
    /// Override the experiment seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 150)]
    pub n_patents: usize,
    /// Private topic words per patent.
    #[arg(long, default_value_t = 40)]
    pub topic_vocab: usize,
    /// Shared boilerplate words.
    #[arg(long, default_value_t = 200)]
    pub shared_vocab: usize,
    /// Words per description.
    #[arg(long, default_value_t = 600)]
    pub words: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

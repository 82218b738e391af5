use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ftopipe_core::corpus::{filter_corpus, load_corpus, CorpusFilter, LoadReport};
use ftopipe_core::encoder::{load_vocabulary, EncodedSequence, Encoder};
use ftopipe_core::eval::{run_experiment, synth_corpus, ExperimentConfig};
use ftopipe_core::pairgen::{
    build_dataset, claim_source, label_counts, read_pairs, split_validation, write_pairs, ValidationSize,
};
use ftopipe_core::ranker::{rank, render_jsonl, render_table};
use ftopipe_core::scorer::{evaluate_accuracy, train_baseline, BaselineModel, ExternalScorer, PairScorer, TrainConfig};
use ftopipe_core::slicer::{slice_corpus, write_pieces, SliceBounds};
use ftopipe_core::{jsonl, PatentDoc, SynthSpec};

use crate::args::*;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(args) => ingest(args),
        Command::Slice(args) => slice(args),
        Command::Pairs(args) => pairs(args),
        Command::Encode(args) => encode(args),
        Command::TrainBaseline(args) => train(args),
        Command::Rank(args) => rank_cmd(args),
        Command::Eval(args) => eval(args),
        Command::Synth(args) => synth(args),
    }
}

fn load(args: &CorpusArgs) -> Result<(LoadReport, Vec<PatentDoc>)> {
    let report = load_corpus(&args.corpus, args.strict)?;
    for (line, reason) in &report.skipped {
        log::warn!("{}:{line}: skipped record: {reason}", args.corpus.display());
    }
    let filter = CorpusFilter {
        class_prefix: args.class_prefix.clone(),
        languages: args.languages.iter().cloned().collect::<BTreeSet<_>>(),
        kinds: args.kinds.iter().cloned().collect::<BTreeSet<_>>(),
    };
    let docs = filter_corpus(&report.docs, &filter);
    Ok((report, docs))
}

fn bounds(args: &SliceBoundsArgs) -> Result<SliceBounds> {
    Ok(SliceBounds::new(args.min_words, args.max_words)?)
}

fn ingest(args: IngestArgs) -> Result<()> {
    let (report, docs) = load(&args.corpus)?;
    println!("records: {}", report.total_records);
    println!("accepted: {}", report.docs.len());
    println!("skipped: {}", report.skipped.len());
    println!("after filter: {}", docs.len());
    if let Some(out) = &args.out {
        jsonl::write_file(out, &docs)?;
    }
    Ok(())
}

fn slice(args: SliceArgs) -> Result<()> {
    let (_, docs) = load(&args.corpus)?;
    let pieces = slice_corpus(&docs, bounds(&args.bounds)?, args.seed)?;
    write_pieces(&args.out, &pieces)?;
    println!("documents: {}", docs.len());
    println!("pieces: {}", pieces.len());
    Ok(())
}

fn default_validation_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "pairs".into());
    out.with_file_name(format!("{stem}.validation.jsonl"))
}

fn pairs(args: PairsArgs) -> Result<()> {
    let (_, docs) = load(&args.corpus)?;
    let pieces = slice_corpus(&docs, bounds(&args.bounds)?, args.seed)?;
    let source = claim_source(&docs, args.claim_mode.into())?;
    let pairs = build_dataset(&pieces, &source, args.seed)?;
    let size = match args.validation_count {
        Some(n) => ValidationSize::Count(n),
        None => ValidationSize::Fraction(args.validation_fraction),
    };
    let (train, validation) = split_validation(&pairs, size, args.seed)?;
    write_pairs(&args.out, &train)?;
    let validation_out = args
        .validation_out
        .clone()
        .unwrap_or_else(|| default_validation_path(&args.out));
    if !validation.is_empty() || args.validation_out.is_some() {
        write_pairs(&validation_out, &validation)?;
    }

    let (label_0, label_1) = label_counts(&pairs);
    println!("documents: {}", docs.len());
    println!("pieces: {}", pieces.len());
    println!("pairs: {}", pairs.len());
    println!("label 0: {label_0}");
    println!("label 1: {label_1}");
    println!("train: {}", train.len());
    println!("validation: {}", validation.len());
    Ok(())
}

fn encode(args: EncodeArgs) -> Result<()> {
    let encoder = Encoder::new(load_vocabulary(&args.vocab)?, args.max_len)?;
    let pairs = read_pairs(&args.pairs)?;
    let mut truncated = 0usize;
    let sequences: Vec<EncodedSequence> = pairs
        .iter()
        .map(|p| {
            let encoded = encoder.encode_pair(&p.description_text, &p.claim_text)?;
            if encoded.truncated_tokens > 0 {
                truncated += 1;
            }
            let mut seq = encoded.sequence;
            seq.label = Some(p.label.id());
            Ok(seq)
        })
        .collect::<Result<_, ftopipe_core::encoder::EncodeError>>()?;
    jsonl::write_file(&args.out, &sequences)?;
    println!("sequences: {}", sequences.len());
    println!("truncated: {truncated}");
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let pairs = read_pairs(&args.pairs)?;
    let outcome = train_baseline(
        &pairs,
        &TrainConfig {
            epochs: args.epochs,
            learning_rate: args.lr,
            seed: args.seed,
        },
    )?;
    outcome.model.save(&args.out)?;
    println!("pairs: {}", pairs.len());
    println!(
        "final loss: {:.6}",
        outcome.loss_trace.last().copied().unwrap_or(f64::NAN)
    );
    println!("train accuracy: {:.4}", outcome.accuracy);
    if let Some(path) = &args.validation {
        let validation = read_pairs(path)?;
        println!(
            "validation accuracy: {:.4}",
            evaluate_accuracy(&outcome.model, &validation)
        );
    }
    Ok(())
}

fn rank_cmd(args: RankArgs) -> Result<()> {
    let query = fs::read_to_string(&args.query_abstract)
        .with_context(|| format!("reading {}", args.query_abstract.display()))?;
    let query_id = args.query_id.clone().unwrap_or_else(|| {
        args.query_abstract
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "query".into())
    });
    let pool = load_corpus(&args.pool, args.strict)?;
    for (line, reason) in &pool.skipped {
        log::warn!("{}:{line}: skipped record: {reason}", args.pool.display());
    }
    let encoder = match &args.vocab {
        Some(path) => Some(Encoder::new(load_vocabulary(path)?, args.max_len)?),
        None => None,
    };
    let scorer: Box<dyn PairScorer> = match args.scorer {
        ScorerArg::Baseline => {
            let path = args
                .model
                .as_ref()
                .context("--model is required for the baseline scorer")?;
            Box::new(BaselineModel::load(path)?)
        }
        ScorerArg::External => {
            let cmd = args.external_cmd.as_deref().unwrap_or_default();
            match ExternalScorer::from_command_line(cmd) {
                Some(scorer) => Box::new(scorer),
                None => bail!("--external-cmd is empty"),
            }
        }
    };
    let ranking = rank(
        &query_id,
        query.trim(),
        &pool.docs,
        args.claim_mode.into(),
        scorer.as_ref(),
        args.top_k,
        encoder.as_ref(),
    )?;
    for warning in &ranking.warnings {
        log::warn!("{warning}");
    }
    match args.format {
        FormatArg::Table => print!("{}", render_table(&query_id, &ranking.results)),
        FormatArg::Jsonl => print!("{}", render_jsonl(&ranking.results)),
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(&args.experiment)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let report = run_experiment(&config, Some(&args.out_dir))?;
    print!("{}", report.render_tables());
    println!();
    for r in &report.references {
        match r.self_rank {
            Some(rank) => println!("{}: self-rank {rank} of {}", r.reference_id, r.candidates),
            None => println!("{}: excluded from candidates", r.reference_id),
        }
    }
    println!("recall@1: {:.4}", report.recall_at_1);
    println!("recall@10: {:.4}", report.recall_at_10);
    println!("mrr: {:.4}", report.mrr);
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let docs = synth_corpus(&SynthSpec {
        n_patents: args.n_patents,
        topic_vocab_size: args.topic_vocab,
        shared_vocab_size: args.shared_vocab,
        words_per_description: args.words,
        seed: args.seed,
    })?;
    jsonl::write_file(&args.out, &docs)?;
    println!("patents: {}", docs.len());
    Ok(())
}

//! Acceptance suite. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ftopipe_core::corpus::{Claim, ClaimMode, PatentDoc};
use ftopipe_core::encoder::{self, Encoder, Vocabulary};
use ftopipe_core::eval::{
    mean_reciprocal_rank, recall_at_k, resolve_pools, run_experiment, synth_corpus, CorpusSource,
};
use ftopipe_core::pairgen::{self, Label};
use ftopipe_core::ranker;
use ftopipe_core::scorer::{softmax, BaselineModel, PairScorer, ScoreError, ScoreRequest, ScoreResult};
use ftopipe_core::slicer::{self, SliceBounds};
use ftopipe_core::ExperimentConfig;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let criteria: [Check; 7] = [
        ("slicing partition", slicing_partition),
        ("dataset balance and identity", dataset_balance_and_identity),
        ("encoding layout", encoding_layout),
        ("softmax", softmax_stability),
        ("ranker oracle equivalence", ranker_oracle_equivalence),
        ("determinism across thread counts", cli_determinism),
        ("desk-scale self-retrieval", desk_scale_self_retrieval),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail} ({secs:.2}s)"),
            Err(reason) => {
                failed += 1;
                println!("[FAIL] {name}: {reason} ({secs:.2}s)");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn words(rng: &mut ChaCha8Rng, prefix: &str, n: usize) -> String {
    (0..n)
        .map(|_| format!("{prefix}{}", rng.random_range(0..500u32)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn random_doc(rng: &mut ChaCha8Rng, idx: usize, desc_words: usize) -> PatentDoc {
    let n_claims = rng.random_range(1..=4u32);
    let claims = (1..=n_claims)
        .map(|number| Claim {
            number,
            text: format!("claim {number} of {idx}: {}", words(rng, "c", 12)),
            is_independent: number == 1 || rng.random_bool(0.4),
        })
        .collect();
    PatentDoc {
        id: format!("AC{idx:05}"),
        kind_code: "B2".into(),
        language: "en".into(),
        classifications: vec!["G06T1/60".into()],
        abstract_text: words(rng, "a", 20),
        description: words(rng, "w", desc_words),
        claims,
    }
}

fn slicing_partition() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bounds = SliceBounds::default();
    let (min, max) = (bounds.min_words, bounds.max_words);
    let mut total_pieces = 0;
    for i in 0..1000 {
        let n_words = rng.random_range(30..=3000);
        let doc = random_doc(&mut rng, i, n_words);
        let seed = rng.random::<u64>();
        let pieces = slicer::slice_description(&doc, bounds, seed).map_err(|e| e.to_string())?;
        let original: Vec<&str> = doc.description.split_whitespace().collect();
        let rebuilt: Vec<&str> = pieces.iter().flat_map(|p| p.text.split_whitespace()).collect();
        ensure!(rebuilt == original, "doc {i}: pieces do not rejoin to the description");
        for (k, p) in pieces.iter().enumerate() {
            let count = p.text.split_whitespace().count();
            ensure!(
                p.piece_index == k && p.patent_id == doc.id,
                "doc {i}: bad piece identity"
            );
            let last = k + 1 == pieces.len();
            let ok = if n_words < min {
                pieces.len() == 1 && count == n_words
            } else if last {
                (min..=max + min - 1).contains(&count)
            } else {
                (min..=max).contains(&count)
            };
            ensure!(ok, "doc {i} ({n_words} words): piece {k} has {count} words");
        }
        total_pieces += pieces.len();
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("1000 descriptions, {total_pieces} pieces"))
}

fn dataset_balance_and_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut sizes = vec![2usize, 200];
    sizes.extend((0..48).map(|_| rng.random_range(2..=200)));
    let mut total_pairs = 0;
    for (run, &n) in sizes.iter().enumerate() {
        let docs: Vec<PatentDoc> = (0..n)
            .map(|i| {
                let len = rng.random_range(5..=500);
                random_doc(&mut rng, i, len)
            })
            .collect();
        let mode = if rng.random_bool(0.5) {
            ClaimMode::All
        } else {
            ClaimMode::FirstOnly
        };
        let seed = rng.random::<u64>();
        let bounds = SliceBounds::new(20, 60).unwrap();
        let pieces = slicer::slice_corpus(&docs, bounds, seed).map_err(|e| e.to_string())?;
        let source = pairgen::claim_source(&docs, mode).map_err(|e| e.to_string())?;
        let pairs = pairgen::build_dataset(&pieces, &source, seed).map_err(|e| e.to_string())?;

        let piece_texts: HashSet<(&str, &str)> =
            pieces.iter().map(|p| (p.patent_id.as_str(), p.text.as_str())).collect();
        let claim_texts: HashSet<(&str, &str)> = docs
            .iter()
            .flat_map(|d| {
                d.claims
                    .iter()
                    .filter(|c| c.is_independent)
                    .map(move |c| (d.id.as_str(), c.text.as_str()))
            })
            .collect();
        let (mut matched, mut mismatched) = (0, 0);
        for p in &pairs {
            match p.label {
                Label::Matched => {
                    matched += 1;
                    ensure!(
                        p.desc_patent_id == p.claim_patent_id,
                        "run {run}: label 1 pair crosses patents"
                    );
                }
                Label::Mismatched => {
                    mismatched += 1;
                    ensure!(
                        p.desc_patent_id != p.claim_patent_id,
                        "run {run}: label 0 pair within one patent"
                    );
                }
            }
            ensure!(
                piece_texts.contains(&(p.desc_patent_id.as_str(), p.description_text.as_str())),
                "run {run}: description text not from its patent"
            );
            ensure!(
                claim_texts.contains(&(p.claim_patent_id.as_str(), p.claim_text.as_str())),
                "run {run}: claim text not an independent claim of its patent"
            );
        }
        let expected_positive: usize = docs
            .iter()
            .map(|d| {
                let own = pieces.iter().filter(|p| p.patent_id == d.id).count();
                own * source[&d.id].len()
            })
            .sum();
        ensure!(
            matched == mismatched,
            "run {run}: {matched} label 1 vs {mismatched} label 0"
        );
        ensure!(
            matched == expected_positive,
            "run {run}: {matched} positives, expected {expected_positive}"
        );
        total_pairs += pairs.len();
    }
    Ok(format!(
        "{} corpora of 2..=200 patents, {total_pairs} pairs checked",
        sizes.len()
    ))
}

/// Vocabulary of whole words, continuation pieces and specials.
fn encoding_vocab() -> Vocabulary {
    let mut tokens: Vec<String> = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for stem in ["image", "sensor", "claim", "memory", "pixel", "filter", "lens", "frame"] {
        tokens.push(stem.to_string());
    }
    for suffix in ["##s", "##ing", "##ed", "##er"] {
        tokens.push(suffix.to_string());
    }
    tokens.push(",".into());
    Vocabulary::from_tokens(tokens).unwrap()
}

fn encoding_text(rng: &mut ChaCha8Rng, n: usize) -> String {
    const FORMS: [&str; 12] = [
        "image", "sensors", "claiming", "memory", "pixeled", "filter", "lenser", "frames", "zebra", "Image,", "qqq",
        "lens",
    ];
    (0..n)
        .map(|_| FORMS[rng.random_range(0..FORMS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn expected_truncation(mut a: usize, mut b: usize, budget: usize) -> (usize, usize) {
    while a + b > budget {
        if a > b {
            a -= 1;
        } else {
            b -= 1;
        }
    }
    (a, b)
}

fn encoding_layout() -> Outcome {
    let vocab = encoding_vocab();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut truncated = 0;
    for max_len in [16usize, 128, 500] {
        let enc = Encoder::new(vocab.clone(), max_len).map_err(|e| e.to_string())?;
        for i in 0..1000 {
            let (len_a, len_b) = (rng.random_range(1..=400), rng.random_range(1..=60));
            let text_a = encoding_text(&mut rng, len_a);
            let text_b = encoding_text(&mut rng, len_b);
            let ids = |t: &str| -> Vec<u32> {
                encoder::wordpiece_tokenize(t, &vocab)
                    .iter()
                    .map(|tok| vocab.id(tok).unwrap())
                    .collect()
            };
            let (ids_a, ids_b) = (ids(&text_a), ids(&text_b));
            let (ka, kb) = expected_truncation(ids_a.len(), ids_b.len(), max_len - 3);
            let out = enc.encode_pair(&text_a, &text_b).map_err(|e| e.to_string())?;
            let seq = &out.sequence;
            let at = |msg: &str| format!("max_len {max_len}, pair {i}: {msg}");
            ensure!(
                seq.token_ids.len() == max_len
                    && seq.segment_ids.len() == max_len
                    && seq.attention_mask.len() == max_len,
                "{}",
                at("wrong length")
            );
            ensure!(ka >= 1 && kb >= 1, "{}", at("truncation emptied a segment"));
            let used = ka + kb + 3;
            let mut expected_ids = vec![vocab.cls_id];
            expected_ids.extend_from_slice(&ids_a[..ka]);
            expected_ids.push(vocab.sep_id);
            expected_ids.extend_from_slice(&ids_b[..kb]);
            expected_ids.push(vocab.sep_id);
            expected_ids.resize(max_len, vocab.pad_id);
            ensure!(seq.token_ids == expected_ids, "{}", at("token layout"));
            let expected_segments: Vec<u8> = (0..max_len).map(|p| u8::from(p > ka + 1 && p < used)).collect();
            ensure!(seq.segment_ids == expected_segments, "{}", at("segment ids"));
            let expected_mask: Vec<u8> = (0..max_len).map(|p| u8::from(p < used)).collect();
            ensure!(seq.attention_mask == expected_mask, "{}", at("attention mask"));
            ensure!(
                out.truncated_tokens == ids_a.len() + ids_b.len() - ka - kb,
                "{}",
                at("truncated token count")
            );
            truncated += usize::from(out.truncated_tokens > 0);
        }
    }
    Ok(format!("3000 sequences, {truncated} truncated"))
}

fn softmax_stability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut samples: Vec<(f64, f64, f64)> =
        vec![(-1e3, 1e3, 0.0), (1e3, -1e3, 0.0), (1e3, 1e3, -1e3), (-1e3, -1e3, 1e3)];
    samples.extend((0..100_000).map(|_| {
        (
            rng.random_range(-1e3..=1e3),
            rng.random_range(-1e3..=1e3),
            rng.random_range(-1e3..=1e3),
        )
    }));
    let mut worst_norm: f64 = 0.0;
    let mut worst_shift: f64 = 0.0;
    for &(a, b, c) in &samples {
        let (p0, p1) = softmax(a, b).map_err(|e| e.to_string())?;
        ensure!(
            (0.0..=1.0).contains(&p0) && (0.0..=1.0).contains(&p1),
            "probability out of range at ({a}, {b})"
        );
        worst_norm = worst_norm.max((p0 + p1 - 1.0).abs());
        let (q0, q1) = softmax(a + c, b + c).map_err(|e| e.to_string())?;
        worst_shift = worst_shift.max((p0 - q0).abs()).max((p1 - q1).abs());
    }
    ensure!(worst_norm <= 1e-9, "normalization error {worst_norm:e}");
    ensure!(worst_shift <= 1e-9, "shift error {worst_shift:e}");
    Ok(format!(
        "{} samples, max |sum-1| {worst_norm:e}, max shift delta {worst_shift:e}",
        samples.len()
    ))
}

/// Scores from a few coarse levels so that ties are common.
struct TieHeavy {
    levels: HashMap<String, i32>,
}

impl TieHeavy {
    fn logit(&self, claim_text: &str) -> f64 {
        f64::from(self.levels[claim_text]) * 0.25
    }
}

impl PairScorer for TieHeavy {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResult>, ScoreError> {
        requests
            .iter()
            .map(|r| ScoreResult::new(r.qid.clone(), r.cid.clone(), 0.0, self.logit(&r.text_b)))
            .collect()
    }
}

fn ranker_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ties = 0;
    for instance in 0..200 {
        let mode = if instance % 2 == 0 {
            ClaimMode::All
        } else {
            ClaimMode::FirstOnly
        };
        let mut docs = Vec::new();
        let mut n_candidates = 0;
        let target = rng.random_range(1..=20);
        let mut ids: Vec<usize> = (0..100).collect();
        ids.shuffle(&mut rng);
        for &idx in &ids {
            let doc = random_doc(&mut rng, idx, 10);
            let k = match mode {
                ClaimMode::All => doc.claims.iter().filter(|c| c.is_independent).count(),
                ClaimMode::FirstOnly => 1,
            };
            if n_candidates + k > target {
                break;
            }
            n_candidates += k;
            docs.push(doc);
        }
        if docs.is_empty() {
            let mut doc = random_doc(&mut rng, 0, 10);
            doc.claims.truncate(1);
            docs.push(doc);
            n_candidates = 1;
        }
        let levels: HashMap<String, i32> = docs
            .iter()
            .flat_map(|d| d.claims.iter().map(|c| c.text.clone()))
            .map(|t| (t, rng.random_range(-2..=2)))
            .collect();
        let scorer = TieHeavy { levels };

        let mut oracle: Vec<(i32, String, u32)> = Vec::new();
        for d in &docs {
            let mut independent: Vec<&Claim> = d.claims.iter().filter(|c| c.is_independent).collect();
            independent.sort_by_key(|c| c.number);
            if mode == ClaimMode::FirstOnly {
                independent.truncate(1);
            }
            for c in independent {
                oracle.push((scorer.levels[&c.text], d.id.clone(), c.number));
            }
        }
        oracle.sort_by(|x, y| y.0.cmp(&x.0).then_with(|| (&x.1, x.2).cmp(&(&y.1, y.2))));
        let distinct: HashSet<i32> = oracle.iter().map(|o| o.0).collect();
        ties += usize::from(distinct.len() < oracle.len());

        let n = oracle.len();
        ensure!(n == n_candidates && n <= 20, "instance {instance}: {n} candidates");
        let ranking = ranker::rank("q", "query text", &docs, mode, &scorer, n, None).map_err(|e| e.to_string())?;
        ensure!(
            ranking.results.len() == n,
            "instance {instance}: {} results for {n} candidates",
            ranking.results.len()
        );
        for (pos, (r, o)) in ranking.results.iter().zip(&oracle).enumerate() {
            let logit = f64::from(o.0) * 0.25;
            let (_, p1) = softmax(0.0, logit).unwrap();
            ensure!(
                r.rank == pos + 1
                    && r.patent_id == o.1
                    && r.claim_number == o.2
                    && r.logit_1 == logit
                    && r.prob_1 == p1,
                "instance {instance}: position {} is {}#{} ({}), oracle {}#{} ({logit})",
                pos + 1,
                r.patent_id,
                r.claim_number,
                r.logit_1,
                o.1,
                o.2
            );
        }
    }
    Ok(format!("200 instances, {ties} with tied scores"))
}

fn ftopipe(dir: &Path, threads: usize, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ftopipe"))
        .current_dir(dir)
        .env_remove("FTOPIPE_THREADS")
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

/// Every file under `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = std::fs::read(&path).unwrap();
                files.insert(path.strip_prefix(dir).unwrap().to_path_buf(), bytes);
            }
        }
    }
    files
}

fn cli_determinism() -> Outcome {
    let experiment = workspace_root().join("configs/desk_scale.json");
    let experiment = experiment.to_str().ok_or("non-utf8 path")?.to_string();
    let mut runs = Vec::new();
    for threads in [1usize, 4] {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let dir = tmp.path();
        let stdout = vec![
            ftopipe(
                dir,
                threads,
                &["synth", "--n-patents", "120", "--seed", "3", "--out", "corpus.jsonl"],
            )?,
            ftopipe(
                dir,
                threads,
                &[
                    "slice",
                    "--corpus",
                    "corpus.jsonl",
                    "--seed",
                    "9",
                    "--out",
                    "pieces.jsonl",
                ],
            )?,
            ftopipe(
                dir,
                threads,
                &[
                    "pairs",
                    "--corpus",
                    "corpus.jsonl",
                    "--seed",
                    "7",
                    "--claim-mode",
                    "all",
                    "--out",
                    "pairs.jsonl",
                ],
            )?,
            ftopipe(
                dir,
                threads,
                &["eval", "--experiment", &experiment, "--out-dir", "eval"],
            )?,
        ];
        runs.push((stdout, snapshot(dir), tmp));
    }
    let (one, four) = (&runs[0], &runs[1]);
    ensure!(one.0 == four.0, "stdout differs between --threads 1 and 4");
    let names: Vec<_> = one.1.keys().collect();
    ensure!(
        names == four.1.keys().collect::<Vec<_>>(),
        "different output files: {names:?}"
    );
    for (name, bytes) in &one.1 {
        ensure!(
            four.1[name] == *bytes,
            "{} differs between --threads 1 and 4",
            name.display()
        );
        ensure!(!bytes.is_empty(), "{} is empty", name.display());
    }
    Ok(format!(
        "synth, slice, pairs, eval: {} files byte-identical",
        names.len()
    ))
}

/// Scores every first independent claim separately and sorts with its own
/// comparator.
fn brute_force(model: &BaselineModel, query: &str, pool: &[PatentDoc]) -> Vec<(String, u32, f64)> {
    let mut scored: Vec<(String, u32, f64)> = pool
        .iter()
        .map(|d| {
            let claim = d
                .claims
                .iter()
                .filter(|c| c.is_independent)
                .min_by_key(|c| c.number)
                .unwrap();
            let f = model.features(query, &claim.text);
            let logit = model.bias + model.weights.iter().zip(f.iter()).map(|(w, x)| w * x).sum::<f64>();
            (d.id.clone(), claim.number, logit)
        })
        .collect();
    scored.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| (&a.0, a.1).cmp(&(&b.0, b.1))));
    scored
}

fn desk_scale_self_retrieval() -> Outcome {
    let start = Instant::now();
    let config = ExperimentConfig::load(workspace_root().join("configs/desk_scale.json")).map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let report = run_experiment(&config, Some(tmp.path())).map_err(|e| e.to_string())?;

    let CorpusSource::Synthetic(spec) = &config.corpus else {
        return Err("desk-scale config must use the synthetic corpus".into());
    };
    let docs = synth_corpus(spec).map_err(|e| e.to_string())?;
    let pools = resolve_pools(&config, &docs).map_err(|e| e.to_string())?;
    ensure!(
        (pools.train.len(), pools.search.len(), pools.references.len()) == (100, 50, 5),
        "pools are {} train, {} search, {} references",
        pools.train.len(),
        pools.search.len(),
        pools.references.len()
    );
    let model = BaselineModel::load(tmp.path().join("model.json")).map_err(|e| e.to_string())?;

    let oracle: Vec<Vec<(String, u32, f64)>> = pools
        .references
        .iter()
        .map(|r| brute_force(&model, &r.abstract_text, &pools.search))
        .collect();
    let oracle_ranks: Vec<Option<usize>> = pools
        .references
        .iter()
        .zip(&oracle)
        .map(|(r, o)| o.iter().position(|(id, _, _)| *id == r.id).map(|p| p + 1))
        .collect();
    let oracle_recall = recall_at_k(&oracle_ranks, 1);
    ensure!(
        oracle_recall >= 0.8,
        "oracle recall@1 is {oracle_recall}, below the 0.8 threshold"
    );

    ensure!(
        report.references.len() == 5,
        "{} references in the report",
        report.references.len()
    );
    for ((reference, result), expected) in pools.references.iter().zip(&report.references).zip(&oracle) {
        ensure!(result.reference_id == reference.id, "reference order differs");
        let got: Vec<(String, u32, f64)> = result
            .ranking
            .iter()
            .map(|r| (r.patent_id.clone(), r.claim_number, r.logit_1))
            .collect();
        let top = &expected[..config.top_k.min(expected.len())];
        ensure!(
            got == top,
            "{}: ranking differs from the oracle: {got:?} vs {top:?}",
            reference.id
        );
        let own = expected
            .iter()
            .position(|(id, _, _)| *id == reference.id)
            .map(|p| p + 1);
        ensure!(
            result.self_rank == own,
            "{}: self-rank {:?}, oracle {own:?}",
            reference.id,
            result.self_rank
        );
    }
    ensure!(
        report.recall_at_1 == oracle_recall,
        "recall@1 {} vs oracle {oracle_recall}",
        report.recall_at_1
    );
    ensure!(
        report.mrr == mean_reciprocal_rank(&oracle_ranks),
        "mrr differs from the oracle"
    );
    ensure!(report.recall_at_1 >= 0.8, "recall@1 is {}", report.recall_at_1);
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!(
        "self-ranks {:?}, recall@1 {:.2} (oracle {:.2}), mrr {:.3}",
        report.self_ranks(),
        report.recall_at_1,
        oracle_recall,
        report.mrr
    ))
}

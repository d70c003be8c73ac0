//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! A single toy model (D=64, 5 000 updates) is trained once and shared by the
//! end-to-end criteria. Exits nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use bisent::model::{
    batch_loss, batch_loss_and_grads, checkpoint_from_bytes, checkpoint_to_bytes, encode_corpus, init_params,
    train, Direction, EmbedModelParams, Example, Hyper, Side, TrainBatch, TrainConfig,
};
use bisent::numerics::{grad_check, ParamSet};
use bisent::pipeline::{
    align_from_matrix, align_recover, build_negative_sets, filter_subsample, find_hub_configuration, hubness_report,
    read_configuration, select_top_n, NegativeSetSpec, ScoredPair,
};
use bisent::similarity::{
    mlp_loss_and_grads, mlp_train, read_embeddings, read_scores_tsv, score_cross_matrix, score_pairs, write_embeddings,
    CslsConfig, EmbeddingMatrix, LabeledPairs, Measure, MlpParams, MlpTrainConfig, ScoringResources,
};
use bisent::textprep::{bpe_decode, mono_from_lines, parallel_from_lines, token_slices, BpeModel, Preprocess};
use bisent::toy::{generate, noisy_corpus, ToyData, ToyLanguage, ToySizes};
use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lib<T>(r: bisent::Result<T>) -> Result<T, String> {
    r.map_err(|e| format!("error: {e}"))
}

/// The shared toy experiment.
struct Toy {
    data: ToyData,
    params: EmbedModelParams,
    train_seconds: f64,
    test_src: EmbeddingMatrix,
    test_tgt: EmbeddingMatrix,
}

const TEST: std::ops::Range<usize> = 0..200;

impl Toy {
    fn train() -> bisent::Result<Self> {
        let lang = ToyLanguage::new(1);
        // 8 000 pairs + 8 000 monolingual lines; the test split also supplies the
        // filtering corpora of criterion 7.
        let data = generate(&lang, ToySizes { test: 17_000, ..ToySizes::default() }, 2);
        let vocab = ToyLanguage::vocabulary();
        let pre = Preprocess::default();
        let parallel = parallel_from_lines(&data.train_src, &data.train_tgt, &pre, &vocab)?;
        let mono = mono_from_lines(&data.mono_tgt, &pre, &vocab);
        let config = TrainConfig {
            hidden_size: 64,
            max_updates: 5000,
            checkpoint_every: 0,
            ..TrainConfig::default()
        };
        let hyper = Hyper {
            hidden_size: config.hidden_size,
            emb_size: config.emb_size,
            vocab_size: vocab.len(),
            direction: config.direction,
        };
        let start = Instant::now();
        let init = init_params(hyper, config.seed, None)?;
        let (params, _) = train(&parallel, &mono, &config, init, 0, &mut |_| Ok(()))?;
        let train_seconds = start.elapsed().as_secs_f64();
        let (test_src, test_tgt) = embed(&params, &data.test_src[TEST], &data.test_tgt[TEST])?;
        Ok(Self {
            data,
            params,
            train_seconds,
            test_src,
            test_tgt,
        })
    }

    fn test_resources(&self) -> ScoringResources<'_> {
        ScoringResources {
            src_emb: Some(&self.test_src),
            tgt_emb: Some(&self.test_tgt),
            csls: CslsConfig { k: 10 },
            ..Default::default()
        }
    }
}

fn embed(params: &EmbedModelParams, src: &[String], tgt: &[String]) -> bisent::Result<(EmbeddingMatrix, EmbeddingMatrix)> {
    let corpus = parallel_from_lines(src, tgt, &Preprocess::default(), &ToyLanguage::vocabulary())?;
    Ok((
        EmbeddingMatrix::new(encode_corpus(params, &token_slices(&corpus.source), Side::Source, 256)?),
        EmbeddingMatrix::new(encode_corpus(params, &token_slices(&corpus.target), Side::Target, 256)?),
    ))
}

fn scored(scores: &[f64]) -> Vec<ScoredPair> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &score)| ScoredPair {
            line_index: i,
            score,
            src_word_count: 0,
            tgt_word_count: 0,
        })
        .collect()
}

fn spread_params(h: Hyper, seed: u64) -> EmbedModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = EmbedModelParams::random(h, &mut rng);
    for t in p.tensors_mut() {
        t.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
    }
    p
}

fn tiny_hyper() -> Hyper {
    Hyper {
        hidden_size: 8,
        emb_size: 5,
        vocab_size: 12,
        direction: Direction::SrcToTgt,
    }
}

fn nmt_example() -> Example {
    Example {
        side: Side::Source,
        input: vec![4, 7, 9],
        output: vec![5, 11, 6, 8],
    }
}

fn ae_example() -> Example {
    Example {
        side: Side::Target,
        input: vec![10, 6],
        output: vec![10, 6],
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let p = spread_params(tiny_hyper(), 1);
    let batch = TrainBatch {
        nmt: vec![nmt_example()],
        ae: vec![ae_example()],
    };
    let (_, grads) = lib(batch_loss_and_grads(&p, &batch))?;
    let model = lib(grad_check(&p, &grads, |q| batch_loss(q, &batch), 1e-4))?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mlp = lib(MlpParams::glorot(&[10, 7, 5, 1], &mut rng))?;
    let x = Array2::from_shape_simple_fn((9, 10), || rng.gen_range(-1.0..1.0));
    let y: Vec<f64> = (0..9).map(|i| (i % 2) as f64).collect();
    let (_, mg) = lib(mlp_loss_and_grads(&mlp, x.view(), &y))?;
    let mlp_report = lib(grad_check(&mlp, &mg, |q| Ok(mlp_loss_and_grads(q, x.view(), &y)?.0), 1e-6))?;
    let secs = start.elapsed().as_secs_f64();
    check(
        model.max_rel_error <= 1e-4
            && model.checked == p.num_scalars()
            && mlp_report.max_rel_error <= 1e-4
            && secs < 60.0,
        format!(
            "model max_rel_error={:.2e} over {} scalars, mlp max_rel_error={:.2e}, {secs:.1}s",
            model.max_rel_error, model.checked, mlp_report.max_rel_error
        ),
    )
}

fn criterion_2() -> Outcome {
    let p = spread_params(tiny_hyper(), 2);
    let nmt = TrainBatch {
        nmt: vec![nmt_example()],
        ae: vec![],
    };
    let ae = TrainBatch {
        nmt: vec![],
        ae: vec![ae_example()],
    };
    let (_, g_nmt) = lib(batch_loss_and_grads(&p, &nmt))?;
    let (_, g_ae) = lib(batch_loss_and_grads(&p, &ae))?;
    let (a, b) = (g_nmt.encoder_norm(Side::Target), g_ae.encoder_norm(Side::Source));
    check(
        a == 0.0 && b == 0.0 && g_nmt.encoder_norm(Side::Source) > 0.0 && g_ae.encoder_norm(Side::Target) > 0.0,
        format!("nmt batch |grad enc_tgt|={a}, ae batch |grad enc_src|={b}"),
    )
}

fn criterion_3(toy: &Toy) -> Outcome {
    let truth: Vec<usize> = TEST.collect();
    let cos = lib(align_recover(Measure::Cosine, &toy.test_resources(), &truth, 64, 1))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let random = Array2::from_shape_simple_fn((TEST.len(), TEST.len()), || rng.gen::<f64>());
    let baseline = lib(align_from_matrix(&random, &truth))?;
    check(
        cos.average_error <= 0.05 && baseline.average_error >= 0.95 && toy.train_seconds <= 900.0,
        format!(
            "cosine average error={:.4} (src2tgt {:.4}, tgt2src {:.4}), random baseline={:.4}, training {:.0}s",
            cos.average_error, cos.src_to_tgt_error, cos.tgt_to_src_error, baseline.average_error, toy.train_seconds
        ),
    )
}

fn criterion_4(toy: &Toy) -> Outcome {
    let truth: Vec<usize> = TEST.collect();
    let res = toy.test_resources();
    let cos = lib(align_recover(Measure::Cosine, &res, &truth, 64, 1))?;
    let csls = lib(align_recover(Measure::Csls, &res, &truth, 64, 1))?;
    let euc = lib(align_recover(Measure::Euclidean, &res, &truth, 64, 1))?;
    check(
        csls.average_error <= cos.average_error
            && (euc.src_to_tgt_error >= cos.src_to_tgt_error || euc.tgt_to_src_error >= cos.tgt_to_src_error),
        format!(
            "average error: csls={:.4} cosine={:.4}; euclidean src2tgt/tgt2src={:.4}/{:.4} vs cosine {:.4}/{:.4}",
            csls.average_error,
            cos.average_error,
            euc.src_to_tgt_error,
            euc.tgt_to_src_error,
            cos.src_to_tgt_error,
            cos.tgt_to_src_error
        ),
    )
}

fn criterion_5() -> Outcome {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/hubness_4x4.tsv");
    let (a, b) = lib(read_configuration(&fixture))?;
    let cfg = CslsConfig { k: 2 };
    let euc = lib(hubness_report(&a, &b, Measure::Euclidean, cfg))?;
    let cos = lib(hubness_report(&a, &b, Measure::Cosine, cfg))?;
    let n = a.n();
    let hub = euc.max_source_in_degree() == n || euc.max_target_in_degree() == n;
    let flat = cos.source_in_degree.iter().chain(&cos.target_in_degree).all(|&d| d == 1);
    // The search that produced the fixture still succeeds.
    let found = lib(find_hub_configuration(4, 7, 10_000))?.is_some();
    check(
        n >= 4 && b.n() >= 4 && hub && flat && found,
        format!(
            "{n}x{} fixture: euclidean source in-degrees {:?}, cosine in-degrees {:?}/{:?}",
            b.n(),
            euc.source_in_degree,
            cos.source_in_degree,
            cos.target_in_degree
        ),
    )
}

/// CSLS by explicit loops: cosines, sorted neighbour lists, K-means.
fn naive_csls(src: &[Vec<f64>], tgt: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let cos = |a: &[f64], b: &[f64]| {
        let mut dot = 0.0;
        let mut na = 0.0;
        let mut nb = 0.0;
        for d in 0..a.len() {
            dot += a[d] * b[d];
            na += a[d] * a[d];
            nb += b[d] * b[d];
        }
        dot / (na.sqrt() * nb.sqrt())
    };
    let r = |x: &[f64], others: &[Vec<f64>]| {
        let mut sims: Vec<f64> = others.iter().map(|o| cos(x, o)).collect();
        sims.sort_by(|p, q| q.total_cmp(p));
        sims[..k].iter().sum::<f64>() / k as f64
    };
    let mut out = vec![vec![0.0; tgt.len()]; src.len()];
    for i in 0..src.len() {
        for j in 0..tgt.len() {
            out[i][j] = 2.0 * cos(&src[i], &tgt[j]) - r(&src[i], tgt) - r(&tgt[j], src);
        }
    }
    out
}

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let mut rows = |n: usize| -> Vec<Vec<f64>> {
            (0..n).map(|_| (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
        };
        let (src, tgt) = (rows(20), rows(20));
        let k = 1 + seed as usize % 20;
        let a = lib(EmbeddingMatrix::from_rows(&src))?;
        let b = lib(EmbeddingMatrix::from_rows(&tgt))?;
        let res = ScoringResources {
            src_emb: Some(&a),
            tgt_emb: Some(&b),
            csls: CslsConfig { k },
            ..Default::default()
        };
        let batched = lib(score_cross_matrix(Measure::Csls, &res, 7, 1))?;
        let naive = naive_csls(&src, &tgt, k);
        for i in 0..20 {
            for j in 0..20 {
                worst = worst.max((batched[[i, j]] - naive[i][j]).abs());
            }
        }
    }
    check(worst <= 1e-10, format!("50 instances (20x20, D=16, K=1..20), max abs diff={worst:.3e}"))
}

/// Lines `rank·n/10 − tail .. rank·n/10` of the score ranking, by sorting directly.
fn naive_negative_sets(scores: &[f64], cuts: &[f64], tail: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    cuts.iter()
        .map(|c| {
            let end = (c * scores.len() as f64).round() as usize;
            order[end - tail..end].to_vec()
        })
        .collect()
}

fn criterion_8() -> Outcome {
    let scores = [0.9, 0.1, 0.5, 0.7, 0.3, 0.8, 0.2, 0.6, 0.4, 0.0];
    let spec = NegativeSetSpec {
        portion_cuts: vec![0.2, 0.4, 0.6, 0.8, 1.0],
        tail_lines: 2,
    };
    let sets = lib(build_negative_sets(&scored(&scores), &spec))?;
    let got: Vec<Vec<usize>> = sets.iter().map(|s| s.lines.clone()).collect();
    let hand = vec![vec![0, 5], vec![3, 7], vec![2, 8], vec![4, 6], vec![1, 9]];
    let oracle = naive_negative_sets(&scores, &spec.portion_cuts, 2);
    check(got == hand && got == oracle, format!("10-line fixture sets {got:?}"))
}

fn bse(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_bse"))
        .args(args)
        .env_remove("BSE_THREADS")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("bse {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn criterion_9(toy: &Toy, dir: &Path) -> Outcome {
    // Budget and nesting on random instances.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let n = rng.gen_range(1..60);
        let pairs: Vec<ScoredPair> = (0..n)
            .map(|i| ScoredPair {
                line_index: i,
                score: rng.gen_range(-1.0..1.0),
                src_word_count: rng.gen_range(1..20),
                tgt_word_count: rng.gen_range(1..20),
            })
            .collect();
        let budget = rng.gen_range(0..300);
        let sel = filter_subsample(&pairs, budget, Side::Target);
        let words: usize = sel.lines.iter().map(|&i| pairs[i].tgt_word_count).sum();
        if words > budget || words != sel.words_kept {
            return Err(format!("budget {budget} exceeded: {words} words"));
        }
        let top = select_top_n(&pairs, n / 2);
        let bigger = select_top_n(&pairs, n);
        if !top.iter().all(|i| bigger.contains(i)) {
            return Err("top-n selections are not nested".into());
        }
    }
    let spec = NegativeSetSpec {
        portion_cuts: vec![0.25, 0.5, 1.0],
        tail_lines: 5,
    };
    let scores: Vec<f64> = (0..40).map(|_| rng.gen()).collect();
    let sets = lib(build_negative_sets(&scored(&scores), &spec))?;
    let oracle = naive_negative_sets(&scores, &spec.portion_cuts, 5);
    if sets.iter().map(|s| s.lines.clone()).collect::<Vec<_>>() != oracle {
        return Err("negative sets differ from the ranked-portion oracle".into());
    }

    // Diagonal-dominant matrices align perfectly.
    let n = 30;
    let m = Array2::from_shape_fn((n, n), |(i, j)| if i == j { 2.0 } else { rng.gen_range(-1.0..1.0) });
    let diag = lib(align_from_matrix(&m, &(0..n).collect::<Vec<_>>()))?;
    if diag.average_error != 0.0 {
        return Err(format!("diagonal-dominant error {}", diag.average_error));
    }

    // End-to-end commands: byte-identical across reruns and thread counts.
    let src = dir.join("src.emb");
    let tgt = dir.join("tgt.emb");
    lib(write_embeddings(&src, &toy.test_src))?;
    lib(write_embeddings(&tgt, &toy.test_tgt))?;
    let (src, tgt) = (src.to_str().unwrap(), tgt.to_str().unwrap());
    let runs: Vec<Vec<&str>> = vec![
        vec!["score", "--cross", "--measure", "csls", "--block-rows", "17", src, tgt],
        vec!["score", "--pairs", "--measure", "euclidean", src, tgt],
        vec!["align", "--measure", "csls", "--seed", "4", src, tgt],
    ];
    let mut compared = 0;
    for args in &runs {
        let mut outputs = Vec::new();
        for threads in ["1", "4", "1", "4"] {
            let mut full = vec!["--threads", threads];
            full.extend_from_slice(args);
            outputs.push(bse(&full)?);
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) || outputs[0].is_empty() {
            return Err(format!("output of {args:?} differs between runs"));
        }
        compared += outputs[0].len();
    }
    Ok(format!(
        "200 budget/nesting instances, oracle nesting, diagonal error 0, {} commands x4 runs identical ({compared} bytes)",
        runs.len()
    ))
}

fn criterion_7(toy: &Toy) -> Outcome {
    let (s, t) = (&toy.data.test_src, &toy.data.test_tgt);
    let eval = lib(noisy_corpus(&s[200..2200], &t[200..2200], &s[2200..10_200], &t[2200..10_200], 11))?;
    let pool = lib(noisy_corpus(&s[11_200..12_200], &t[11_200..12_200], &s[12_200..17_000], &t[12_200..17_000], 12))?;

    // Negatives: the last 1 000 lines of the cosine-ranked top 60% of the pool.
    let (pool_src, pool_tgt) = lib(embed(&toy.params, &pool.src, &pool.tgt))?;
    let pool_res = ScoringResources {
        src_emb: Some(&pool_src),
        tgt_emb: Some(&pool_tgt),
        ..Default::default()
    };
    let pool_cos = lib(score_pairs(Measure::Cosine, &pool_res))?;
    let spec = NegativeSetSpec {
        portion_cuts: vec![0.6],
        tail_lines: 1000,
    };
    let neg = lib(build_negative_sets(&scored(&pool_cos), &spec))?.remove(0).lines;
    let select = |m: &EmbeddingMatrix| EmbeddingMatrix::new(m.data().select(Axis(0), &neg));
    let (pos_src, pos_tgt) = lib(embed(&toy.params, &s[10_200..11_200], &t[10_200..11_200]))?;
    let labeled = lib(LabeledPairs::new(pos_src, pos_tgt, select(&pool_src), select(&pool_tgt)))?;
    let mlp = lib(mlp_train(&labeled, &MlpTrainConfig::default()))?;

    let (eval_src, eval_tgt) = lib(embed(&toy.params, &eval.src, &eval.tgt))?;
    let res = ScoringResources {
        src_emb: Some(&eval_src),
        tgt_emb: Some(&eval_tgt),
        mlp: Some(&mlp),
        ..Default::default()
    };
    let precision = |scores: &[f64]| {
        let picked = select_top_n(&scored(scores), 2000);
        picked.iter().filter(|&&i| eval.parallel[i]).count() as f64 / picked.len() as f64
    };
    let mlp_scores = lib(score_pairs(Measure::Mlp, &res))?;
    let cos_scores = lib(score_pairs(Measure::Cosine, &res))?;
    let (p_mlp, p_cos) = (precision(&mlp_scores), precision(&cos_scores));
    let fraction = |parallel: bool, pred: fn(f64) -> bool| {
        let xs: Vec<f64> = (0..mlp_scores.len()).filter(|&i| eval.parallel[i] == parallel).map(|i| mlp_scores[i]).collect();
        xs.iter().filter(|&&v| pred(v)).count() as f64 / xs.len() as f64
    };
    let low = fraction(false, |v| v < 0.05);
    let high = fraction(true, |v| v > 0.95);
    check(
        p_mlp >= 0.9 && p_mlp > p_cos && low >= 0.6 && high >= 0.6,
        format!(
            "precision@2000 mlp={p_mlp:.4} cosine={p_cos:.4}; mismatched<0.05: {low:.4}, true>0.95: {high:.4}"
        ),
    )
}

/// Random words over several scripts, single-spaced.
fn fuzz_corpus(lines: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet: Vec<char> = "abcdenstäöüßéдомя日本語🙂\u{301}".chars().collect();
    (0..lines)
        .map(|_| {
            (0..rng.gen_range(1..8))
                .map(|_| (0..rng.gen_range(1..9)).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect::<String>())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

fn criterion_10(toy: &Toy, dir: &Path) -> Outcome {
    let vocab = ToyLanguage::vocabulary();
    let bytes = checkpoint_to_bytes(&toy.params, &vocab.hash(), 5000);
    let again = checkpoint_to_bytes(&lib(checkpoint_from_bytes(&bytes, Some(&vocab.hash())))?.params, &vocab.hash(), 5000);
    if bytes != again {
        return Err("checkpoint save→load→save changed bytes".into());
    }

    let corpus = fuzz_corpus(1000, 10);
    let bpe = lib(BpeModel::learn(corpus.iter().map(String::as_str), 400))?;
    if let Some(bad) = corpus.iter().find(|l| &bpe_decode(&bpe.apply(l)) != *l) {
        return Err(format!("BPE round trip failed on {bad:?}"));
    }

    // Embed through the command line, score the files, compare with in-process results.
    let model = dir.join("toy.bse");
    let vocab_path = dir.join("vocab.txt");
    std::fs::write(&model, &bytes).map_err(|e| e.to_string())?;
    lib(vocab.save(&vocab_path))?;
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    std::fs::write(p("test.src"), toy.data.test_src[TEST].join("\n") + "\n").map_err(|e| e.to_string())?;
    std::fs::write(p("test.tgt"), toy.data.test_tgt[TEST].join("\n") + "\n").map_err(|e| e.to_string())?;
    for (side, input, out) in [("source", "test.src", "cli_src.emb"), ("target", "test.tgt", "cli_tgt.emb")] {
        bse(&[
            "embed", "--checkpoint", &p("toy.bse"), "--vocab", &p("vocab.txt"), "--side", side,
            "--input", &p(input), "-o", &p(out),
        ])?;
    }
    let cli_src = lib(read_embeddings(&dir.join("cli_src.emb")))?;
    let expected = toy.test_src.data().mapv(|v| v as f32 as f64);
    let max_emb = (cli_src.data() - &expected).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    bse(&["score", "--pairs", "--measure", "cosine", "-o", &p("cos.tsv"), &p("cli_src.emb"), &p("cli_tgt.emb")])?;
    let cli_scores = lib(read_scores_tsv(&dir.join("cos.tsv")))?;
    let direct = lib(score_pairs(Measure::Cosine, &toy.test_resources()))?;
    let max_score = cli_scores.iter().zip(&direct).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    check(
        cli_src.n() == TEST.len() && max_emb <= 1e-6 && cli_scores.len() == direct.len() && max_score <= 1e-5,
        format!(
            "checkpoint {} bytes identical; BPE 1000 lines; embed→score max |Δemb|={max_emb:.1e}, max |Δscore|={max_score:.1e}",
            bytes.len()
        ),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let toy = Toy::train().map_err(|e| format!("toy training failed: {e}"));
    let with_toy = |f: &dyn Fn(&Toy) -> Outcome| match &toy {
        Ok(t) => f(t),
        Err(e) => Err(e.clone()),
    };

    let results: Vec<(u32, Outcome)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, with_toy(&criterion_3)),
        (4, with_toy(&criterion_4)),
        (5, criterion_5()),
        (6, criterion_6()),
        (7, with_toy(&criterion_7)),
        (8, criterion_8()),
        (9, with_toy(&|t| criterion_9(t, dir.path()))),
        (10, with_toy(&|t| criterion_10(t, dir.path()))),
    ];
    let mut failed = 0;
    for (n, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {n}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

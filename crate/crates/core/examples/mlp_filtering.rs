//! Parallel corpus filtering with a learned MLP similarity.
//!
//! Builds a noisy toy bitext (true pairs mixed with deranged mismatches), ranks a
//! separate noisy pool by cosine to draw 60%-cut negatives, trains the MLP on known
//! translations versus those negatives, and compares the precision of a fixed-size
//! selection under MLP and cosine scores.
//!
//! ```text
//! cargo run --release --example mlp_filtering -- [model.bse | updates]
//! ```
//!
//! A checkpoint written by the `toy_alignment` example is reused when given;
//! otherwise a toy model is trained first.

use bisent::model::{encode_corpus, init_params, load_checkpoint, train, EmbedModelParams, Side, TrainConfig};
use bisent::pipeline::{build_negative_sets, select_top_n, NegativeSetSpec, ScoredPair};
use bisent::similarity::{
    mlp_train, score_pairs, EmbeddingMatrix, LabeledPairs, Measure, MlpTrainConfig, ScoringResources,
};
use bisent::textprep::{mono_from_lines, parallel_from_lines, token_slices, Preprocess};
use bisent::toy::{generate, noisy_corpus, ToyLanguage, ToySizes};

fn embed(params: &EmbedModelParams, src: &[String], tgt: &[String]) -> bisent::Result<(EmbeddingMatrix, EmbeddingMatrix)> {
    let vocab = ToyLanguage::vocabulary();
    let corpus = parallel_from_lines(src, tgt, &Preprocess::default(), &vocab)?;
    Ok((
        EmbeddingMatrix::new(encode_corpus(params, &token_slices(&corpus.source), Side::Source, 256)?),
        EmbeddingMatrix::new(encode_corpus(params, &token_slices(&corpus.target), Side::Target, 256)?),
    ))
}

fn pairs_of(scores: &[f64]) -> Vec<ScoredPair> {
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

fn main() -> bisent::Result<()> {
    let lang = ToyLanguage::new(1);
    // Splits are drawn in order, so train and mono match the toy_alignment example.
    let data = generate(&lang, ToySizes { test: 17_000, ..ToySizes::default() }, 2);
    let vocab = ToyLanguage::vocabulary();

    let arg = std::env::args().nth(1).unwrap_or_else(|| "5000".into());
    let params = match arg.parse::<u64>() {
        Ok(updates) => {
            let pre = Preprocess::default();
            let parallel = parallel_from_lines(&data.train_src, &data.train_tgt, &pre, &vocab)?;
            let mono = mono_from_lines(&data.mono_tgt, &pre, &vocab);
            let config = TrainConfig { max_updates: updates, checkpoint_every: 0, ..TrainConfig::default() };
            let hyper = bisent::model::Hyper {
                hidden_size: config.hidden_size,
                emb_size: config.emb_size,
                vocab_size: vocab.len(),
                direction: config.direction,
            };
            let init = init_params(hyper, config.seed, None)?;
            train(&parallel, &mono, &config, init, 0, &mut |_| Ok(()))?.0
        }
        Err(_) => load_checkpoint(&arg, Some(&vocab.hash()))?.params,
    };

    let (s, t) = (&data.test_src, &data.test_tgt);
    // Evaluation bitext: 2 000 true pairs hidden among 8 000 mismatches.
    let eval = noisy_corpus(&s[200..2200], &t[200..2200], &s[2200..10_200], &t[2200..10_200], 11)?;
    // Disjoint pool whose cosine ranking supplies the negatives.
    let pool = noisy_corpus(&s[11_200..12_200], &t[11_200..12_200], &s[12_200..17_000], &t[12_200..17_000], 12)?;

    let (pool_src, pool_tgt) = embed(&params, &pool.src, &pool.tgt)?;
    let pool_res = ScoringResources { src_emb: Some(&pool_src), tgt_emb: Some(&pool_tgt), ..Default::default() };
    let pool_cos = score_pairs(Measure::Cosine, &pool_res)?;
    let spec = NegativeSetSpec { portion_cuts: vec![0.6], tail_lines: 1000 };
    let neg_lines = &build_negative_sets(&pairs_of(&pool_cos), &spec)?[0].lines;
    let neg_parallel = neg_lines.iter().filter(|&&i| pool.parallel[i]).count();
    println!("negatives={} of_which_parallel={neg_parallel}", neg_lines.len());

    let (pos_src, pos_tgt) = embed(&params, &s[10_200..11_200], &t[10_200..11_200])?;
    let select = |m: &EmbeddingMatrix| EmbeddingMatrix::new(m.data().select(ndarray::Axis(0), neg_lines));
    let labeled = LabeledPairs::new(pos_src, pos_tgt, select(&pool_src), select(&pool_tgt))?;
    let mlp = mlp_train(&labeled, &MlpTrainConfig::default())?;

    let (eval_src, eval_tgt) = embed(&params, &eval.src, &eval.tgt)?;
    let res = ScoringResources {
        src_emb: Some(&eval_src),
        tgt_emb: Some(&eval_tgt),
        mlp: Some(&mlp),
        ..Default::default()
    };
    let budget = 2000;
    for measure in [Measure::Cosine, Measure::Mlp] {
        let scores = score_pairs(measure, &res)?;
        let picked = select_top_n(&pairs_of(&scores), budget);
        let hits = picked.iter().filter(|&&i| eval.parallel[i]).count();
        println!("measure={measure} selected={budget} precision={:.4}", hits as f64 / budget as f64);
        if measure == Measure::Mlp {
            let frac = |want: bool, pred: &dyn Fn(f64) -> bool| {
                let xs: Vec<f64> = (0..scores.len()).filter(|&i| eval.parallel[i] == want).map(|i| scores[i]).collect();
                xs.iter().filter(|&&v| pred(v)).count() as f64 / xs.len() as f64
            };
            println!(
                "mismatched_below_0.05={:.4} true_above_0.95={:.4}",
                frac(false, &|v| v < 0.05),
                frac(true, &|v| v > 0.95)
            );
        }
    }
    Ok(())
}

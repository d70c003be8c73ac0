//! Trains the embedding model on the synthetic toy language and recovers the
//! alignment of a held-out test set under cosine, Euclidean and CSLS similarity.
//!
//! ```text
//! cargo run --release --example toy_alignment -- [updates] [model.bse]
//! ```

use std::time::Instant;

use bisent::model::{encode_corpus, init_params, save_checkpoint, train, Side, TrainConfig, TrainEvent};
use bisent::pipeline::align_recover;
use bisent::similarity::{CslsConfig, EmbeddingMatrix, Measure, ScoringResources};
use bisent::textprep::{mono_from_lines, parallel_from_lines, token_slices, Preprocess};
use bisent::toy::{generate, ToyLanguage, ToySizes};

fn main() -> bisent::Result<()> {
    let updates: u64 = std::env::args().nth(1).map_or(5000, |s| s.parse().expect("update count"));

    let lang = ToyLanguage::new(1);
    let data = generate(&lang, ToySizes::default(), 2);
    let vocab = ToyLanguage::vocabulary();
    let pre = Preprocess::default();
    let parallel = parallel_from_lines(&data.train_src, &data.train_tgt, &pre, &vocab)?;
    let mono = mono_from_lines(&data.mono_tgt, &pre, &vocab);
    let test = parallel_from_lines(&data.test_src, &data.test_tgt, &pre, &vocab)?;

    let config = TrainConfig {
        max_updates: updates,
        checkpoint_every: 0,
        ..TrainConfig::default()
    };
    let hyper = bisent::model::Hyper {
        hidden_size: config.hidden_size,
        emb_size: config.emb_size,
        vocab_size: vocab.len(),
        direction: config.direction,
    };
    let start = Instant::now();
    let mut window = 0.0;
    let params = init_params(hyper, config.seed, None)?;
    let (params, _) = train(&parallel, &mono, &config, params, 0, &mut |event| {
        if let TrainEvent::Step { updates, stats } = event {
            window += stats.loss;
            if updates % 500 == 0 {
                println!(
                    "update={updates} lr={} loss={:.4} elapsed_s={:.1}",
                    stats.lr,
                    window / 500.0,
                    start.elapsed().as_secs_f64()
                );
                window = 0.0;
            }
        }
        Ok(())
    })?;

    if let Some(path) = std::env::args().nth(2) {
        save_checkpoint(&params, &vocab.hash(), updates, &path)?;
        println!("wrote {path}");
    }

    let src_tokens = token_slices(&test.source);
    let tgt_tokens = token_slices(&test.target);
    let src = EmbeddingMatrix::new(encode_corpus(&params, &src_tokens, Side::Source, 256)?);
    let tgt = EmbeddingMatrix::new(encode_corpus(&params, &tgt_tokens, Side::Target, 256)?);
    let res = ScoringResources {
        src_emb: Some(&src),
        tgt_emb: Some(&tgt),
        csls: CslsConfig::default(),
        ..Default::default()
    };
    let truth: Vec<usize> = (0..src.n()).collect();
    for measure in [Measure::Cosine, Measure::Euclidean, Measure::Csls] {
        let r = align_recover(measure, &res, &truth, 64, 1)?;
        println!(
            "measure={measure} src2tgt={:.4} tgt2src={:.4} average={:.4}",
            r.src_to_tgt_error, r.tgt_to_src_error, r.average_error
        );
    }
    Ok(())
}

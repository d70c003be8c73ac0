//! Budgeted selection from a scored bitext: lines are taken best-first until the next
//! one would exceed the word budget.
//!
//! ```text
//! cargo run --release --example corpus_filtering
//! ```

use bisent::model::Side;
use bisent::pipeline::{filter_subsample, rank_by_score, ScoredPair};
use bisent::similarity::{levenshtein_sim, score_pairs, EmbeddingMatrix, Measure, ScoringResources};

fn main() -> bisent::Result<()> {
    let src = ["a small house", "the cat sleeps", "completely unrelated text here", "good morning"];
    let tgt = ["ein kleines haus", "die katze schläft", "guten abend", "guten morgen"];
    // Stand-in sentence embeddings; in practice these come from a trained model.
    let src_emb = EmbeddingMatrix::from_rows(&[
        vec![1.0, 0.1, 0.0],
        vec![0.0, 1.0, 0.2],
        vec![0.3, -0.2, 1.0],
        vec![0.5, 0.5, 0.1],
    ])?;
    let tgt_emb = EmbeddingMatrix::from_rows(&[
        vec![0.9, 0.2, 0.1],
        vec![0.1, 1.0, 0.1],
        vec![-0.8, 0.3, -0.1],
        vec![0.4, 0.6, 0.0],
    ])?;
    let res = ScoringResources {
        src_emb: Some(&src_emb),
        tgt_emb: Some(&tgt_emb),
        ..Default::default()
    };
    let scores = score_pairs(Measure::Cosine, &res)?;
    let pairs: Vec<ScoredPair> = scores
        .iter()
        .enumerate()
        .map(|(i, &score)| ScoredPair {
            line_index: i,
            score,
            src_word_count: src[i].split_whitespace().count(),
            tgt_word_count: tgt[i].split_whitespace().count(),
        })
        .collect();
    for p in rank_by_score(&pairs) {
        println!(
            "line={} cosine={:.4} levenshtein={} | {} ||| {}",
            p.line_index,
            p.score,
            levenshtein_sim(src[p.line_index], tgt[p.line_index]),
            src[p.line_index],
            tgt[p.line_index]
        );
    }
    let sel = filter_subsample(&pairs, 8, Side::Target);
    println!("budget={} kept_words={} lines={:?}", sel.budget, sel.words_kept, sel.lines);
    Ok(())
}

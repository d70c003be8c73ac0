//! Negative training sets of graded quality from a scored corpus: for each cut `c`, the
//! worst-scored lines inside the best `c` portion, plus a uniformly random set.
//!
//! ```text
//! cargo run --release --example negative_sets
//! ```

use bisent::pipeline::{
    build_negative_sets, derangement, negative_set_file_name, random_negative_set, NegativeSetSpec, ScoredPair,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> bisent::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pairs: Vec<ScoredPair> = (0..50)
        .map(|i| ScoredPair {
            line_index: i,
            score: rng.gen_range(-1.0..1.0),
            src_word_count: 0,
            tgt_word_count: 0,
        })
        .collect();
    let spec = NegativeSetSpec {
        tail_lines: 4,
        ..NegativeSetSpec::default()
    };
    for set in build_negative_sets(&pairs, &spec)? {
        let scores: Vec<String> = set.lines.iter().map(|&i| format!("{:.3}", pairs[i].score)).collect();
        println!("{} lines={:?} scores={scores:?}", negative_set_file_name(set.cut), set.lines);
    }
    println!("neg_random.txt lines={:?}", random_negative_set(pairs.len(), 4, 1)?);
    // Guaranteed-mismatched pairings for synthetic negatives.
    println!("derangement of 8: {:?}", derangement(8, 2)?);
    Ok(())
}

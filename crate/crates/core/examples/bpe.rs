//! Learns BPE merges on a small corpus, segments a sentence and decodes it back.
//!
//! ```text
//! cargo run --release --example bpe
//! ```

use bisent::textprep::{bpe_decode, BpeModel};

fn main() -> bisent::Result<()> {
    let corpus = [
        "low lower lowest",
        "new newer newest",
        "wide wider widest",
        "the newest widest road is lower",
    ];
    let model = BpeModel::learn(corpus.iter().copied(), 12)?;
    for (a, b) in model.merges() {
        println!("merge {a} + {b}");
    }
    let line = "the lowest newer road";
    let pieces = model.apply(line);
    println!("segmented: {}", pieces.join(" "));
    let decoded = bpe_decode(&pieces);
    println!("decoded:   {decoded}");
    assert_eq!(decoded, line);
    Ok(())
}

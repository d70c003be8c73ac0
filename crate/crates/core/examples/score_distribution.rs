//! Rank/score export of a scored corpus, e.g. for plotting how sharply a measure
//! separates good from bad pairs.
//!
//! ```text
//! cargo run --release --example score_distribution
//! ```

use bisent::pipeline::{score_distribution_export, write_distribution_tsv};
use bisent::similarity::Measure;

fn main() -> bisent::Result<()> {
    let cosine = [0.91, -0.2, 0.35, 0.88, 0.05, -0.6];
    let records = score_distribution_export(&cosine, Measure::Cosine, true);
    let stdout = std::io::stdout();
    write_distribution_tsv(stdout.lock(), &records).map_err(|e| bisent::Error::io("<stdout>", e))?;
    Ok(())
}

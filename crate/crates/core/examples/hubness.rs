//! Hubness under cosine, Euclidean and CSLS.
//!
//! Searches a small 2-D configuration in which one source is the Euclidean nearest
//! neighbour of every target while cosine matches one-to-one, prints in-degree
//! histograms, and writes the configuration when given a path:
//!
//! ```text
//! cargo run --release --example hubness -- [out.tsv]
//! ```

use bisent::pipeline::{find_hub_configuration, hubness_report, write_configuration, HubnessReport};
use bisent::similarity::{CslsConfig, Measure};

fn main() -> bisent::Result<()> {
    let n = 4;
    let (a, b) = find_hub_configuration(n, 7, 10_000)?.expect("no configuration within the search budget");
    for measure in [Measure::Cosine, Measure::Euclidean, Measure::Csls] {
        let r = hubness_report(&a, &b, measure, CslsConfig { k: 2 })?;
        println!(
            "measure={measure} source_in_degree={:?} target_in_degree={:?} source_histogram={:?}",
            r.source_in_degree,
            r.target_in_degree,
            HubnessReport::histogram(&r.source_in_degree)
        );
    }
    if let Some(path) = std::env::args().nth(1) {
        let mut f = std::fs::File::create(&path).map_err(|e| bisent::Error::io(&path, e))?;
        write_configuration(&mut f, &a, &b).map_err(|e| bisent::Error::io(&path, e))?;
        println!("wrote {path}");
    }
    Ok(())
}

use std::io::Write;

use crate::similarity::Measure;

/// `(rank, score)` records, best first, ranks from 1. With `rescale`, cosine scores
/// are mapped linearly from `[-1, 1]` to `[0, 1]`; other measures pass through.
pub fn score_distribution_export(scores: &[f64], measure: Measure, rescale: bool) -> Vec<(usize, f64)> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let map = |s: f64| {
        if rescale && measure == Measure::Cosine {
            (s + 1.0) / 2.0
        } else {
            s
        }
    };
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, s)| (i + 1, map(s)))
        .collect()
}

pub fn write_distribution_tsv(mut out: impl Write, records: &[(usize, f64)]) -> std::io::Result<()> {
    writeln!(out, "rank\tscore")?;
    for (rank, score) in records {
        writeln!(out, "{rank}\t{score:.6}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cosine_rescale_endpoints() {
        let r = score_distribution_export(&[0.0, -1.0, 1.0], Measure::Cosine, true);
        assert_eq!(r, vec![(1, 1.0), (2, 0.5), (3, 0.0)]);
    }

    #[test]
    fn other_measures_pass_through() {
        let r = score_distribution_export(&[0.2, 0.97], Measure::Mlp, true);
        assert_eq!(r, vec![(1, 0.97), (2, 0.2)]);
        let r = score_distribution_export(&[-0.5], Measure::Cosine, false);
        assert_eq!(r, vec![(1, -0.5)]);
    }

    proptest! {
        #[test]
        fn non_increasing(scores in prop::collection::vec(-1.0f64..1.0, 0..50)) {
            let r = score_distribution_export(&scores, Measure::Cosine, true);
            prop_assert!(r.windows(2).all(|w| w[0].1 >= w[1].1));
            prop_assert!(r.iter().all(|(_, s)| (0.0..=1.0).contains(s)));
        }
    }
}

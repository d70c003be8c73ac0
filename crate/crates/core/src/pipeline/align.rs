use std::io::Write;

use ndarray::{Array2, ArrayView2};

use crate::similarity::{score_cross, Measure, ScoringResources};
use crate::{Error, Result};

/// Error rates of recovering a known one-to-one alignment by argmax, in both
/// directions, plus the predicted partner of every sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub src_to_tgt_error: f64,
    pub tgt_to_src_error: f64,
    /// Mean of the two directional rates.
    pub average_error: f64,
    /// Predicted target for every source sentence.
    pub src_predictions: Vec<usize>,
    /// Predicted source for every target sentence.
    pub tgt_predictions: Vec<usize>,
}

/// Consumes a score matrix in ascending row blocks, keeping only each row's argmax and
/// a running argmax per column.
#[derive(Debug, Clone)]
pub struct AlignmentAccumulator {
    n_src: usize,
    n_tgt: usize,
    next_row: usize,
    row_best: Vec<usize>,
    col_best: Vec<(usize, f64)>,
}

impl AlignmentAccumulator {
    pub fn new(n_src: usize, n_tgt: usize) -> Self {
        Self {
            n_src,
            n_tgt,
            next_row: 0,
            row_best: Vec::with_capacity(n_src),
            col_best: vec![(0, f64::NEG_INFINITY); n_tgt],
        }
    }

    pub fn push(&mut self, start: usize, block: ArrayView2<f64>) -> Result<()> {
        if start != self.next_row || block.ncols() != self.n_tgt || start + block.nrows() > self.n_src {
            return Err(Error::Contract(format!(
                "score block at row {start} ({}×{}) does not continue a {}×{} matrix at row {}",
                block.nrows(),
                block.ncols(),
                self.n_src,
                self.n_tgt,
                self.next_row
            )));
        }
        for (offset, row) in block.outer_iter().enumerate() {
            let i = start + offset;
            let mut best = (0, f64::NEG_INFINITY);
            for (j, &v) in row.iter().enumerate() {
                // Strict comparisons keep the lowest index on ties.
                if v > best.1 {
                    best = (j, v);
                }
                if v > self.col_best[j].1 {
                    self.col_best[j] = (i, v);
                }
            }
            self.row_best.push(best.0);
        }
        self.next_row += block.nrows();
        Ok(())
    }

    /// `truth[i]` is the target index paired with source `i`; it must be a permutation.
    pub fn finish(self, truth: &[usize]) -> Result<AlignmentResult> {
        if self.next_row != self.n_src {
            return Err(Error::Contract(format!(
                "only {} of {} score rows were supplied",
                self.next_row, self.n_src
            )));
        }
        let inverse = invert(truth, self.n_tgt)?;
        let wrong_fwd = self
            .row_best
            .iter()
            .zip(truth)
            .filter(|(p, t)| p != t)
            .count();
        let tgt_predictions: Vec<usize> = self.col_best.iter().map(|&(i, _)| i).collect();
        let wrong_bwd = tgt_predictions
            .iter()
            .zip(&inverse)
            .filter(|(p, t)| p != t)
            .count();
        let fwd = wrong_fwd as f64 / self.n_src as f64;
        let bwd = wrong_bwd as f64 / self.n_tgt as f64;
        Ok(AlignmentResult {
            src_to_tgt_error: fwd,
            tgt_to_src_error: bwd,
            average_error: (fwd + bwd) / 2.0,
            src_predictions: self.row_best,
            tgt_predictions,
        })
    }
}

fn invert(truth: &[usize], n: usize) -> Result<Vec<usize>> {
    if truth.len() != n || n == 0 {
        return Err(Error::Contract(format!(
            "alignment recovery needs a nonempty one-to-one test set, got {} sources and {n} targets",
            truth.len()
        )));
    }
    let mut inverse = vec![usize::MAX; n];
    for (i, &t) in truth.iter().enumerate() {
        if t >= n || inverse[t] != usize::MAX {
            return Err(Error::Contract("ground-truth alignment is not a permutation".into()));
        }
        inverse[t] = i;
    }
    Ok(inverse)
}

/// Recovery on a score matrix already in memory.
pub fn align_from_matrix(scores: &Array2<f64>, truth: &[usize]) -> Result<AlignmentResult> {
    let (n, m) = scores.dim();
    if n == 0 || m == 0 {
        return Err(Error::Contract("empty test set".into()));
    }
    let mut acc = AlignmentAccumulator::new(n, m);
    acc.push(0, scores.view())?;
    acc.finish(truth)
}

/// Recovery under `measure`, streaming the score matrix in row blocks. Sources and
/// targets are expected to be parallel after `truth`: source `i` translates to target
/// `truth[i]`.
pub fn align_recover(
    measure: Measure,
    res: &ScoringResources<'_>,
    truth: &[usize],
    block_rows: usize,
    threads: usize,
) -> Result<AlignmentResult> {
    let n = truth.len();
    if n == 0 {
        return Err(Error::Contract("empty test set".into()));
    }
    let mut acc = AlignmentAccumulator::new(n, n);
    score_cross(measure, res, block_rows, threads, |start, block| acc.push(start, block))?;
    acc.finish(truth)
}

/// `direction<TAB>error` lines: `src2tgt`, `tgt2src`, `average`.
pub fn write_alignment_report(mut out: impl Write, r: &AlignmentResult) -> std::io::Result<()> {
    writeln!(out, "direction\terror")?;
    writeln!(out, "src2tgt\t{:.6}", r.src_to_tgt_error)?;
    writeln!(out, "tgt2src\t{:.6}", r.tgt_to_src_error)?;
    writeln!(out, "average\t{:.6}", r.average_error)
}

/// `src_index<TAB>predicted_tgt_index` lines.
pub fn write_predictions(mut out: impl Write, r: &AlignmentResult) -> std::io::Result<()> {
    for (i, p) in r.src_predictions.iter().enumerate() {
        writeln!(out, "{i}\t{p}")?;
    }
    Ok(())
}

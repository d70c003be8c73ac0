use std::cmp::Ordering;
use std::io::Write;

use crate::model::Side;

/// One scored line of a bitext, with whitespace word counts of its raw sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub line_index: usize,
    pub score: f64,
    pub src_word_count: usize,
    pub tgt_word_count: usize,
}

impl ScoredPair {
    pub fn words(&self, side: Side) -> usize {
        match side {
            Side::Source => self.src_word_count,
            Side::Target => self.tgt_word_count,
        }
    }
}

/// Higher score first, lower line index first among equals; NaN ranks last.
fn by_rank(a: &ScoredPair, b: &ScoredPair) -> Ordering {
    let key = |s: f64| if s.is_nan() { f64::NEG_INFINITY } else { s };
    key(b.score)
        .total_cmp(&key(a.score))
        .then(a.line_index.cmp(&b.line_index))
}

/// The pairs sorted best-first under the deterministic tie-break.
pub fn rank_by_score(scores: &[ScoredPair]) -> Vec<ScoredPair> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(by_rank);
    sorted
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterSelection {
    /// Selected line indices, ascending.
    pub lines: Vec<usize>,
    pub words_kept: usize,
    pub budget: usize,
}

/// Takes lines best-first until the next one would push the counted words over
/// `word_budget`, then stops.
pub fn filter_subsample(scores: &[ScoredPair], word_budget: usize, count_side: Side) -> FilterSelection {
    let mut lines = Vec::new();
    let mut words = 0usize;
    for pair in rank_by_score(scores) {
        let w = pair.words(count_side);
        if words + w > word_budget {
            break;
        }
        words += w;
        lines.push(pair.line_index);
    }
    lines.sort_unstable();
    FilterSelection {
        lines,
        words_kept: words,
        budget: word_budget,
    }
}

/// The `n` best lines, ascending.
pub fn select_top_n(scores: &[ScoredPair], n: usize) -> Vec<usize> {
    let mut lines: Vec<usize> = rank_by_score(scores)
        .into_iter()
        .take(n)
        .map(|p| p.line_index)
        .collect();
    lines.sort_unstable();
    lines
}

/// One line index per line.
pub fn write_selection(mut out: impl Write, lines: &[usize]) -> std::io::Result<()> {
    for l in lines {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

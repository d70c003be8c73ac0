use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{rank_by_score, ScoredPair};
use crate::{Error, Result};

/// Graded negative sets: for every cut `c`, the worst `tail_lines` lines among the top
/// `⌊c·n⌋` of the scored corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSetSpec {
    pub portion_cuts: Vec<f64>,
    pub tail_lines: usize,
}

impl Default for NegativeSetSpec {
    fn default() -> Self {
        Self {
            portion_cuts: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            tail_lines: 1000,
        }
    }
}

impl NegativeSetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.portion_cuts.is_empty() {
            return Err(Error::Config("at least one portion cut is required".into()));
        }
        if self.portion_cuts.iter().any(|&c| !(c > 0.0 && c <= 1.0))
            || self.portion_cuts.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Config(format!(
                "portion cuts {:?} must be strictly increasing within (0, 1]",
                self.portion_cuts
            )));
        }
        if self.tail_lines == 0 {
            return Err(Error::Config("tail_lines must be at least 1".into()));
        }
        Ok(())
    }
}

/// Lines in the top-`cut` portion of `n`. The small slack absorbs representation
/// error in products like `0.29 · 100`.
fn portion_size(cut: f64, n: usize) -> usize {
    ((cut * n as f64 + 1e-9).floor() as usize).min(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSet {
    pub cut: f64,
    /// Line indices in rank order (best first).
    pub lines: Vec<usize>,
}

/// `neg_<percent>.txt`, e.g. `neg_60.txt` for the 0.6 cut.
pub fn negative_set_file_name(cut: f64) -> String {
    let pct = cut * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("neg_{}.txt", pct.round() as u64)
    } else {
        format!("neg_{pct}.txt")
    }
}

pub fn build_negative_sets(scores: &[ScoredPair], spec: &NegativeSetSpec) -> Result<Vec<NegativeSet>> {
    spec.validate()?;
    let n = scores.len();
    let smallest = portion_size(spec.portion_cuts[0], n);
    if spec.tail_lines > smallest {
        return Err(Error::Config(format!(
            "tail of {} lines exceeds the smallest portion ({smallest} of {n} lines at cut {})",
            spec.tail_lines, spec.portion_cuts[0]
        )));
    }
    let ranked: Vec<usize> = rank_by_score(scores).iter().map(|p| p.line_index).collect();
    Ok(spec
        .portion_cuts
        .iter()
        .map(|&cut| {
            let end = portion_size(cut, n);
            NegativeSet {
                cut,
                lines: ranked[end - spec.tail_lines..end].to_vec(),
            }
        })
        .collect())
}

/// `count` distinct lines drawn uniformly, ascending.
pub fn random_negative_set(corpus_size: usize, count: usize, seed: u64) -> Result<Vec<usize>> {
    if count > corpus_size {
        return Err(Error::Config(format!(
            "cannot sample {count} lines from a corpus of {corpus_size}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = rand::seq::index::sample(&mut rng, corpus_size, count).into_vec();
    lines.sort_unstable();
    Ok(lines)
}

/// A seeded permutation of `0..n` with no fixed points (uniform, by rejection).
pub fn derangement(n: usize, seed: u64) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::Contract(format!("a derangement needs at least 2 elements, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    // About e ≈ 2.7 shuffles are needed on average.
    loop {
        perm.shuffle(&mut rng);
        if perm.iter().enumerate().all(|(i, &p)| i != p) {
            return Ok(perm);
        }
    }
}

/// Index pairs `(i, π(i))` for a seeded derangement `π`: every source paired with a
/// target that is not its translation.
pub fn mismatched_pairs(n: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    Ok(derangement(n, seed)?.into_iter().enumerate().collect())
}

//! A synthetic language pair for smoke runs and tests.
//!
//! Source sentences are random sequences of 3–10 tokens `s0 … s49`; the translation
//! reverses a sentence and maps every token through a fixed, seeded bijection onto
//! `t0 … t49`. A model that learns the language can embed a sentence and its
//! translation at the same point, which makes alignment recovery measurable at
//! small scale.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pipeline::derangement;
use crate::textprep::Vocabulary;
use crate::{Error, Result};

pub const TOY_VOCAB: usize = 50;
pub const MIN_LEN: usize = 3;
pub const MAX_LEN: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyLanguage {
    /// `mapping[i]` is the target token of source token `i`.
    mapping: Vec<usize>,
}

impl ToyLanguage {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mapping: Vec<usize> = (0..TOY_VOCAB).collect();
        mapping.shuffle(&mut rng);
        Self { mapping }
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn random_source<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let len = rng.gen_range(MIN_LEN..=MAX_LEN);
        (0..len).map(|_| rng.gen_range(0..TOY_VOCAB)).collect()
    }

    pub fn translate(&self, source: &[usize]) -> Vec<usize> {
        source.iter().rev().map(|&t| self.mapping[t]).collect()
    }

    /// Every token of both languages: `s0 … s49`, then `t0 … t49`.
    pub fn vocabulary() -> Vocabulary {
        let tokens = (0..TOY_VOCAB)
            .map(|i| format!("s{i}"))
            .chain((0..TOY_VOCAB).map(|i| format!("t{i}")));
        Vocabulary::from_tokens(tokens).expect("distinct toy tokens")
    }
}

pub fn source_line(ids: &[usize]) -> String {
    ids.iter().map(|i| format!("s{i}")).collect::<Vec<_>>().join(" ")
}

pub fn target_line(ids: &[usize]) -> String {
    ids.iter().map(|i| format!("t{i}")).collect::<Vec<_>>().join(" ")
}

/// Text lines of a toy experiment; every source sentence occurs at most once across
/// all splits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyData {
    pub train_src: Vec<String>,
    pub train_tgt: Vec<String>,
    /// Target-language sentences for autoencoding, not translations of `train_src`.
    pub mono_tgt: Vec<String>,
    pub test_src: Vec<String>,
    pub test_tgt: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToySizes {
    pub train: usize,
    pub mono: usize,
    pub test: usize,
}

impl Default for ToySizes {
    fn default() -> Self {
        Self {
            train: 8000,
            mono: 8000,
            test: 200,
        }
    }
}

pub fn generate(lang: &ToyLanguage, sizes: ToySizes, seed: u64) -> ToyData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut fresh = |rng: &mut ChaCha8Rng| loop {
        let s = lang.random_source(rng);
        if seen.insert(s.clone()) {
            return s;
        }
    };
    let mut split = |n: usize, rng: &mut ChaCha8Rng| -> (Vec<String>, Vec<String>) {
        (0..n)
            .map(|_| {
                let s = fresh(rng);
                (source_line(&s), target_line(&lang.translate(&s)))
            })
            .unzip()
    };
    let (train_src, train_tgt) = split(sizes.train, &mut rng);
    let (_, mono_tgt) = split(sizes.mono, &mut rng);
    let (test_src, test_tgt) = split(sizes.test, &mut rng);
    ToyData {
        train_src,
        train_tgt,
        mono_tgt,
        test_src,
        test_tgt,
    }
}

/// A bitext mixing true translations with deliberately mismatched pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoisyCorpus {
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    /// Whether line `i` is a true translation pair.
    pub parallel: Vec<bool>,
}

/// Interleaves the true pairs `(true_src[i], true_tgt[i])` with pairs
/// `(mis_src[i], mis_tgt[σ(i)])` for a random derangement σ, in a seeded random
/// line order. Sentences are assumed unique, so every deranged pair is a mismatch.
pub fn noisy_corpus(
    true_src: &[String],
    true_tgt: &[String],
    mis_src: &[String],
    mis_tgt: &[String],
    seed: u64,
) -> Result<NoisyCorpus> {
    if true_src.len() != true_tgt.len() || mis_src.len() != mis_tgt.len() {
        return Err(Error::Shape("both sides of each pair set need equal lengths".into()));
    }
    let sigma = derangement(mis_src.len(), seed)?;
    let mut lines: Vec<(String, String, bool)> = true_src
        .iter()
        .zip(true_tgt)
        .map(|(s, t)| (s.clone(), t.clone(), true))
        .chain(mis_src.iter().zip(&sigma).map(|(s, &j)| (s.clone(), mis_tgt[j].clone(), false)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    lines.shuffle(&mut rng);
    let mut corpus = NoisyCorpus {
        src: Vec::with_capacity(lines.len()),
        tgt: Vec::with_capacity(lines.len()),
        parallel: Vec::with_capacity(lines.len()),
    };
    for (s, t, p) in lines {
        corpus.src.push(s);
        corpus.tgt.push(t);
        corpus.parallel.push(p);
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translation_reverses_and_maps() {
        let lang = ToyLanguage::new(3);
        let m = lang.mapping();
        assert_eq!(lang.translate(&[1, 2, 3]), vec![m[3], m[2], m[1]]);
        let mut sorted = m.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..TOY_VOCAB).collect::<Vec<_>>());
    }

    #[test]
    fn generated_data_is_well_formed() {
        let lang = ToyLanguage::new(1);
        let d = generate(&lang, ToySizes { train: 50, mono: 20, test: 10 }, 9);
        assert_eq!((d.train_src.len(), d.mono_tgt.len(), d.test_tgt.len()), (50, 20, 10));
        let vocab = ToyLanguage::vocabulary();
        assert_eq!(vocab.len(), 104);
        for line in d.train_src.iter().chain(&d.train_tgt).chain(&d.mono_tgt) {
            let n = line.split_whitespace().count();
            assert!((MIN_LEN..=MAX_LEN).contains(&n));
            assert!(line.split_whitespace().all(|t| vocab.get(t).is_some()));
        }
        let all: HashSet<&String> = d.train_src.iter().chain(&d.test_src).collect();
        assert_eq!(all.len(), 60);
        assert_eq!(generate(&lang, ToySizes { train: 50, mono: 20, test: 10 }, 9), d);
    }

    #[test]
    fn noisy_corpus_marks_true_pairs() {
        let lang = ToyLanguage::new(2);
        let d = generate(&lang, ToySizes { train: 5, mono: 0, test: 20 }, 3);
        let c = noisy_corpus(&d.train_src, &d.train_tgt, &d.test_src, &d.test_tgt, 4).unwrap();
        assert_eq!(c.src.len(), 25);
        assert_eq!(c.parallel.iter().filter(|&&p| p).count(), 5);
        let translation: std::collections::HashMap<&String, &String> =
            d.train_src.iter().chain(&d.test_src).zip(d.train_tgt.iter().chain(&d.test_tgt)).collect();
        for i in 0..c.src.len() {
            assert_eq!(translation[&c.src[i]] == &c.tgt[i], c.parallel[i]);
        }
    }
}

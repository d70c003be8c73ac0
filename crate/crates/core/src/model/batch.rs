use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Direction, Side};
use crate::textprep::{ParallelCorpus, Sentence};

/// One training example: `input` goes through the encoder for `side`, the shared
/// decoder reproduces `output`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub side: Side,
    pub input: Vec<u32>,
    pub output: Vec<u32>,
}

/// A mini-batch with translation and autoencoding examples in a 1:1 ratio (±1 when
/// the batch size is odd).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrainBatch {
    pub nmt: Vec<Example>,
    pub ae: Vec<Example>,
}

impl TrainBatch {
    pub fn len(&self) -> usize {
        self.nmt.len() + self.ae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn examples(&self) -> impl Iterator<Item = &Example> {
        self.nmt.iter().chain(self.ae.iter())
    }
}

fn mix(seed: u64, stream: u64, epoch: u64) -> u64 {
    // splitmix64 over the combined key
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ epoch.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Endless walk over `0..n`, reshuffled at every epoch from `(seed, stream, epoch)`.
#[derive(Debug, Clone)]
struct ShuffledCycle {
    n: usize,
    seed: u64,
    stream: u64,
    epoch: u64,
    order: Vec<usize>,
    pos: usize,
}

impl ShuffledCycle {
    fn new(n: usize, seed: u64, stream: u64) -> Self {
        Self {
            n,
            seed,
            stream,
            epoch: 0,
            order: epoch_order(n, seed, stream, 0),
            pos: 0,
        }
    }

    fn next(&mut self) -> usize {
        if self.pos == self.n {
            self.epoch += 1;
            self.order = epoch_order(self.n, self.seed, self.stream, self.epoch);
            self.pos = 0;
        }
        self.pos += 1;
        self.order[self.pos - 1]
    }
}

fn epoch_order(n: usize, seed: u64, stream: u64, epoch: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix(seed, stream, epoch)));
    order
}

/// Infinite, seeded stream of training batches.
///
/// Translation examples walk the parallel corpus; autoencoding examples walk the
/// monolingual corpus of the decoder language together with that side of the
/// parallel corpus. Both walks reshuffle independently at their own epoch ends.
pub struct BatchStream<'a> {
    parallel: &'a ParallelCorpus,
    ae_pool: Vec<&'a Sentence>,
    direction: Direction,
    batch_size: usize,
    nmt_cycle: ShuffledCycle,
    ae_cycle: ShuffledCycle,
    index: u64,
}

impl<'a> BatchStream<'a> {
    /// `mono` holds sentences of the autoencoded language (target for `src2tgt`,
    /// source for `tgt2src`); it may be empty.
    pub fn new(
        parallel: &'a ParallelCorpus,
        mono: &'a [Sentence],
        direction: Direction,
        batch_size: usize,
        seed: u64,
    ) -> crate::Result<Self> {
        if parallel.is_empty() {
            return Err(crate::Error::Contract("parallel corpus is empty".into()));
        }
        if batch_size == 0 {
            return Err(crate::Error::Config("batch_size must be >= 1".into()));
        }
        let decoded_side = match direction {
            Direction::SrcToTgt => &parallel.target,
            Direction::TgtToSrc => &parallel.source,
        };
        let ae_pool: Vec<&Sentence> = mono.iter().chain(decoded_side.iter()).collect();
        Ok(Self {
            parallel,
            nmt_cycle: ShuffledCycle::new(parallel.len(), seed, 1),
            ae_cycle: ShuffledCycle::new(ae_pool.len(), seed, 2),
            ae_pool,
            direction,
            batch_size,
            index: 0,
        })
    }

    /// Translation examples in the batch with the given index.
    pub fn nmt_count(&self, index: u64) -> usize {
        let half = self.batch_size / 2;
        if self.batch_size % 2 == 1 && index.is_multiple_of(2) {
            half + 1
        } else {
            half
        }
    }
}

impl Iterator for BatchStream<'_> {
    type Item = TrainBatch;

    fn next(&mut self) -> Option<TrainBatch> {
        let n_nmt = self.nmt_count(self.index);
        let n_ae = self.batch_size - n_nmt;
        let mut batch = TrainBatch::default();
        for _ in 0..n_nmt {
            let i = self.nmt_cycle.next();
            let (src, tgt) = (&self.parallel.source[i], &self.parallel.target[i]);
            batch.nmt.push(match self.direction {
                Direction::SrcToTgt => Example {
                    side: Side::Source,
                    input: src.tokens.clone(),
                    output: tgt.tokens.clone(),
                },
                Direction::TgtToSrc => Example {
                    side: Side::Target,
                    input: tgt.tokens.clone(),
                    output: src.tokens.clone(),
                },
            });
        }
        let ae_side = match self.direction {
            Direction::SrcToTgt => Side::Target,
            Direction::TgtToSrc => Side::Source,
        };
        for _ in 0..n_ae {
            let s = self.ae_pool[self.ae_cycle.next()];
            batch.ae.push(Example {
                side: ae_side,
                input: s.tokens.clone(),
                output: s.tokens.clone(),
            });
        }
        self.index += 1;
        Some(batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(tokens: Vec<u32>, line: usize) -> Sentence {
        Sentence {
            tokens,
            surface: String::new(),
            line,
        }
    }

    fn corpus(n: usize) -> ParallelCorpus {
        ParallelCorpus {
            source: (0..n).map(|i| sent(vec![4 + i as u32], i)).collect(),
            target: (0..n).map(|i| sent(vec![100 + i as u32], i)).collect(),
        }
    }

    #[test]
    fn even_batches_split_evenly() {
        let p = corpus(10);
        let mut s = BatchStream::new(&p, &[], Direction::SrcToTgt, 4, 7).unwrap();
        for _ in 0..5 {
            let b = s.next().unwrap();
            assert_eq!((b.nmt.len(), b.ae.len()), (2, 2));
            assert!(b.nmt.iter().all(|e| e.side == Side::Source && e.input[0] < 100));
            assert!(b.ae.iter().all(|e| e.side == Side::Target && e.input == e.output));
        }
    }

    #[test]
    fn odd_batches_alternate() {
        let p = corpus(10);
        let mut s = BatchStream::new(&p, &[], Direction::SrcToTgt, 5, 7).unwrap();
        let sizes: Vec<(usize, usize)> = (0..4)
            .map(|_| {
                let b = s.next().unwrap();
                (b.nmt.len(), b.ae.len())
            })
            .collect();
        assert_eq!(sizes, vec![(3, 2), (2, 3), (3, 2), (2, 3)]);
    }

    #[test]
    fn epochs_reshuffle_reproducibly() {
        assert_ne!(epoch_order(50, 3, 1, 0), epoch_order(50, 3, 1, 1));
        assert_eq!(epoch_order(50, 3, 1, 4), epoch_order(50, 3, 1, 4));

        let p = corpus(12);
        let a: Vec<TrainBatch> = BatchStream::new(&p, &[], Direction::SrcToTgt, 6, 9).unwrap().take(10).collect();
        let b: Vec<TrainBatch> = BatchStream::new(&p, &[], Direction::SrcToTgt, 6, 9).unwrap().take(10).collect();
        assert_eq!(a, b);
        // every epoch visits each pair exactly once
        let mut seen: Vec<u32> = a[..4].iter().flat_map(|b| b.nmt.iter().map(|e| e.input[0])).collect();
        seen.sort_unstable();
        assert_eq!(seen, (4..16).collect::<Vec<u32>>());
    }

    #[test]
    fn ae_pool_includes_mono_and_parallel_side() {
        let p = corpus(3);
        let mono = vec![sent(vec![55], 0), sent(vec![56], 1)];
        let mut s = BatchStream::new(&p, &mono, Direction::SrcToTgt, 10, 1).unwrap();
        let b = s.next().unwrap();
        let mut ids: Vec<u32> = b.ae.iter().map(|e| e.input[0]).collect();
        ids.sort_unstable();
        assert_eq!(ids, vec![55, 56, 100, 101, 102]);
    }

    #[test]
    fn reverse_direction_swaps_roles() {
        let p = corpus(4);
        let mono = vec![sent(vec![77], 0)];
        let mut s = BatchStream::new(&p, &mono, Direction::TgtToSrc, 8, 1).unwrap();
        let b = s.next().unwrap();
        for e in &b.nmt {
            assert_eq!(e.side, Side::Target);
            assert!(e.input[0] >= 100 && e.output[0] < 100);
        }
        for e in &b.ae {
            assert_eq!(e.side, Side::Source);
            assert!(e.input[0] < 100 || e.input[0] == 77);
        }
    }

    #[test]
    fn empty_parallel_is_error() {
        let p = ParallelCorpus::default();
        assert!(BatchStream::new(&p, &[], Direction::SrcToTgt, 4, 1).is_err());
    }
}

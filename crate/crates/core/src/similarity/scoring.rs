//! Running a similarity measure over aligned pairs or over a full cross product.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2, ArrayView2, Axis};
use rayon::prelude::*;

use super::{
    cosine, cosine_block, csls_block, euclidean_sim, knn_penalties, levenshtein_sim, CslsConfig,
    EmbeddingMatrix, MlpParams,
};
use crate::model::{encode_batch, posterior_scores_from_states, EmbedModelParams, Side};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    Cosine,
    Euclidean,
    Csls,
    Mlp,
    Levenshtein,
    Posterior,
}

impl Measure {
    pub const ALL: [Measure; 6] = [
        Measure::Cosine,
        Measure::Euclidean,
        Measure::Csls,
        Measure::Mlp,
        Measure::Levenshtein,
        Measure::Posterior,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Cosine => "cosine",
            Measure::Euclidean => "euclidean",
            Measure::Csls => "csls",
            Measure::Mlp => "mlp",
            Measure::Levenshtein => "levenshtein",
            Measure::Posterior => "posterior",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown measure {s:?}")))
    }
}

/// How the scores of several posterior models are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PosteriorCombine {
    #[default]
    Sum,
    Mean,
}

impl FromStr for PosteriorCombine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(PosteriorCombine::Sum),
            "mean" => Ok(PosteriorCombine::Mean),
            _ => Err(Error::Config(format!("unknown posterior combination {s:?}"))),
        }
    }
}

/// Trained models plus the token ids of both sides. Each model scores the sentence of
/// its decoder language given the other one.
#[derive(Debug, Clone, Copy)]
pub struct PosteriorResources<'a> {
    pub models: &'a [EmbedModelParams],
    pub src_tokens: &'a [Vec<u32>],
    pub tgt_tokens: &'a [Vec<u32>],
    pub combine: PosteriorCombine,
}

/// Whatever a measure might need; each measure checks for its own inputs.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScoringResources<'a> {
    pub src_emb: Option<&'a EmbeddingMatrix>,
    pub tgt_emb: Option<&'a EmbeddingMatrix>,
    pub csls: CslsConfig,
    pub mlp: Option<&'a MlpParams>,
    pub src_text: Option<&'a [String]>,
    pub tgt_text: Option<&'a [String]>,
    pub posterior: Option<PosteriorResources<'a>>,
}

fn missing(measure: Measure, what: &str) -> Error {
    Error::Config(format!("measure {measure} requires {what}"))
}

struct PosteriorModel<'a> {
    params: &'a EmbedModelParams,
    /// Encoded sentences of the model's input language.
    states: Array2<f64>,
    input_side: Side,
}

/// A measure with its resources checked and any corpus-level precomputation done.
enum Scorer<'a> {
    Cosine(&'a EmbeddingMatrix, &'a EmbeddingMatrix),
    Euclidean(&'a EmbeddingMatrix, &'a EmbeddingMatrix),
    Csls {
        src: &'a EmbeddingMatrix,
        tgt: &'a EmbeddingMatrix,
        src_penalty: Vec<f64>,
        tgt_penalty: Vec<f64>,
    },
    Mlp(&'a MlpParams, &'a EmbeddingMatrix, &'a EmbeddingMatrix),
    Levenshtein(&'a [String], &'a [String]),
    Posterior {
        models: Vec<PosteriorModel<'a>>,
        src: &'a [Vec<u32>],
        tgt: &'a [Vec<u32>],
        combine: PosteriorCombine,
    },
}

impl<'a> Scorer<'a> {
    fn new(measure: Measure, res: &ScoringResources<'a>) -> Result<Self> {
        let embeddings = || -> Result<(&'a EmbeddingMatrix, &'a EmbeddingMatrix)> {
            let (a, b) = res
                .src_emb
                .zip(res.tgt_emb)
                .ok_or_else(|| missing(measure, "source and target embeddings"))?;
            if a.dim() != b.dim() {
                return Err(Error::Shape(format!(
                    "source embeddings have dimension {}, target {}",
                    a.dim(),
                    b.dim()
                )));
            }
            Ok((a, b))
        };
        Ok(match measure {
            Measure::Cosine => {
                let (a, b) = embeddings()?;
                Scorer::Cosine(a, b)
            }
            Measure::Euclidean => {
                let (a, b) = embeddings()?;
                Scorer::Euclidean(a, b)
            }
            Measure::Csls => {
                let (src, tgt) = embeddings()?;
                Scorer::Csls {
                    src,
                    tgt,
                    src_penalty: knn_penalties(src, tgt, res.csls.k)?,
                    tgt_penalty: knn_penalties(tgt, src, res.csls.k)?,
                }
            }
            Measure::Mlp => {
                let mlp = res.mlp.ok_or_else(|| missing(measure, "MLP parameters"))?;
                let (a, b) = embeddings()?;
                if mlp.embedding_dim() != a.dim() {
                    return Err(Error::Shape(format!(
                        "MLP expects {}-dimensional embeddings, got {}",
                        mlp.embedding_dim(),
                        a.dim()
                    )));
                }
                Scorer::Mlp(mlp, a, b)
            }
            Measure::Levenshtein => {
                let (a, b) = res
                    .src_text
                    .zip(res.tgt_text)
                    .ok_or_else(|| missing(measure, "raw source and target text"))?;
                Scorer::Levenshtein(a, b)
            }
            Measure::Posterior => {
                let p = res
                    .posterior
                    .ok_or_else(|| missing(measure, "a model checkpoint and tokenized text"))?;
                if p.models.is_empty() {
                    return Err(missing(measure, "at least one model checkpoint"));
                }
                let models = p
                    .models
                    .iter()
                    .map(|params| {
                        let input_side = params.hyper.decoder_side().other();
                        let inputs = match input_side {
                            Side::Source => p.src_tokens,
                            Side::Target => p.tgt_tokens,
                        };
                        let seqs: Vec<&[u32]> = inputs.iter().map(Vec::as_slice).collect();
                        Ok(PosteriorModel {
                            params,
                            states: encode_batch(params, &seqs, input_side)?,
                            input_side,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Scorer::Posterior {
                    models,
                    src: p.src_tokens,
                    tgt: p.tgt_tokens,
                    combine: p.combine,
                }
            }
        })
    }

    fn sizes(&self) -> (usize, usize) {
        match self {
            Scorer::Cosine(a, b) | Scorer::Euclidean(a, b) | Scorer::Mlp(_, a, b) => (a.n(), b.n()),
            Scorer::Csls { src, tgt, .. } => (src.n(), tgt.n()),
            Scorer::Levenshtein(a, b) => (a.len(), b.len()),
            Scorer::Posterior { src, tgt, .. } => (src.len(), tgt.len()),
        }
    }

    /// Scores of source rows `start..end` against every target.
    fn block(&self, start: usize, end: usize) -> Result<Array2<f64>> {
        let (_, m) = self.sizes();
        Ok(match self {
            Scorer::Cosine(a, b) => cosine_block(a, start, end, b),
            Scorer::Euclidean(a, b) => Array2::from_shape_fn((end - start, m), |(i, j)| {
                euclidean_sim(a.row(start + i), b.row(j))
            }),
            Scorer::Csls {
                src,
                tgt,
                src_penalty,
                tgt_penalty,
            } => csls_block(
                cosine_block(src, start, end, tgt).view(),
                &src_penalty[start..end],
                tgt_penalty,
            ),
            Scorer::Mlp(mlp, a, b) => mlp.score_cross(
                a.data().slice(s![start..end, ..]),
                b.data().view(),
            )?,
            Scorer::Levenshtein(a, b) => Array2::from_shape_fn((end - start, m), |(i, j)| {
                levenshtein_sim(&a[start + i], &b[j])
            }),
            Scorer::Posterior {
                models,
                src,
                tgt,
                combine,
            } => {
                let mut out = Array2::zeros((end - start, m));
                for i in start..end {
                    for model in models {
                        let row = posterior_row(model, i, src, tgt)?;
                        let mut dst = out.row_mut(i - start);
                        dst.iter_mut().zip(&row).for_each(|(d, s)| *d += s);
                    }
                }
                if *combine == PosteriorCombine::Mean {
                    out /= models.len() as f64;
                }
                out
            }
        })
    }

    /// Scores of aligned pairs `(src_i, tgt_i)`.
    fn pairs(&self) -> Result<Vec<f64>> {
        let (n, m) = self.sizes();
        if n != m {
            return Err(Error::Shape(format!(
                "pairwise scoring needs equally many sources and targets, got {n} and {m}"
            )));
        }
        Ok(match self {
            Scorer::Cosine(a, b) => (0..n).map(|i| cosine(a.row(i), b.row(i)).value).collect(),
            Scorer::Euclidean(a, b) => (0..n).map(|i| euclidean_sim(a.row(i), b.row(i))).collect(),
            Scorer::Csls {
                src,
                tgt,
                src_penalty,
                tgt_penalty,
            } => (0..n)
                .map(|i| 2.0 * cosine(src.row(i), tgt.row(i)).value - src_penalty[i] - tgt_penalty[i])
                .collect(),
            Scorer::Mlp(mlp, a, b) => mlp.score_rows(a.data().view(), b.data().view())?,
            Scorer::Levenshtein(a, b) => a.iter().zip(b.iter()).map(|(x, y)| levenshtein_sim(x, y)).collect(),
            Scorer::Posterior {
                models,
                src,
                tgt,
                combine,
            } => {
                let mut out = vec![0.0; n];
                for model in models {
                    let outputs: Vec<&[u32]> = match model.input_side {
                        Side::Source => tgt.iter().map(Vec::as_slice).collect(),
                        Side::Target => src.iter().map(Vec::as_slice).collect(),
                    };
                    let scores = posterior_scores_from_states(model.params, &model.states, &outputs)?;
                    out.iter_mut().zip(scores).for_each(|(o, s)| *o += s);
                }
                if *combine == PosteriorCombine::Mean {
                    out.iter_mut().for_each(|o| *o /= models.len() as f64);
                }
                out
            }
        })
    }
}

/// One source sentence `i` against every target under one posterior model.
fn posterior_row(model: &PosteriorModel<'_>, i: usize, src: &[Vec<u32>], tgt: &[Vec<u32>]) -> Result<Vec<f64>> {
    let m = tgt.len();
    match model.input_side {
        Side::Source => {
            let s0 = model
                .states
                .slice(s![i..i + 1, ..])
                .broadcast((m, model.states.ncols()))
                .expect("broadcast one row")
                .to_owned();
            let outputs: Vec<&[u32]> = tgt.iter().map(Vec::as_slice).collect();
            posterior_scores_from_states(model.params, &s0, &outputs)
        }
        Side::Target => {
            let outputs = vec![src[i].as_slice(); m];
            posterior_scores_from_states(model.params, &model.states, &outputs)
        }
    }
}

/// One score per aligned pair `(src_i, tgt_i)`.
pub fn score_pairs(measure: Measure, res: &ScoringResources<'_>) -> Result<Vec<f64>> {
    Scorer::new(measure, res)?.pairs()
}

/// Computes the full `n × m` score matrix in row blocks of `block_rows` sources and
/// hands each block, with its first row index, to `sink` in ascending order.
///
/// Up to `threads` blocks are computed concurrently; every block is computed the same
/// way regardless, so the emitted values do not depend on `threads` or `block_rows`.
pub fn score_cross<F>(
    measure: Measure,
    res: &ScoringResources<'_>,
    block_rows: usize,
    threads: usize,
    mut sink: F,
) -> Result<()>
where
    F: FnMut(usize, ArrayView2<f64>) -> Result<()>,
{
    if block_rows == 0 || threads == 0 {
        return Err(Error::Config("block size and thread count must be positive".into()));
    }
    let scorer = Scorer::new(measure, res)?;
    let (n, _) = scorer.sizes();
    let starts: Vec<usize> = (0..n).step_by(block_rows).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} threads: {e}")))?;
    for group in starts.chunks(threads) {
        let blocks: Vec<Result<Array2<f64>>> = pool.install(|| {
            group
                .par_iter()
                .map(|&start| scorer.block(start, (start + block_rows).min(n)))
                .collect()
        });
        for (&start, block) in group.iter().zip(blocks) {
            sink(start, block?.view())?;
        }
    }
    Ok(())
}

/// [`score_cross`] collected into one matrix.
pub fn score_cross_matrix(measure: Measure, res: &ScoringResources<'_>, block_rows: usize, threads: usize) -> Result<Array2<f64>> {
    let mut rows: Vec<Array2<f64>> = Vec::new();
    let mut width = 0;
    score_cross(measure, res, block_rows, threads, |_, block| {
        width = block.ncols();
        rows.push(block.to_owned());
        Ok(())
    })?;
    if rows.is_empty() {
        return Ok(Array2::zeros((0, width)));
    }
    let views: Vec<ArrayView2<f64>> = rows.iter().map(|r| r.view()).collect();
    Ok(ndarray::concatenate(Axis(0), &views).expect("blocks share width"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ParamSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, d: usize, rng: &mut ChaCha8Rng) -> EmbeddingMatrix {
        EmbeddingMatrix::new(Array2::from_shape_simple_fn((n, d), || rng.gen_range(-1.0..1.0)))
    }

    fn words(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
        (0..n)
            .map(|_| (0..rng.gen_range(0..8)).map(|_| rng.gen_range('a'..='e')).collect())
            .collect()
    }

    #[test]
    fn pairwise_cosine_is_elementwise() {
        let a = EmbeddingMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let b = EmbeddingMatrix::from_rows(&[vec![1.0, 0.0], vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let res = ScoringResources {
            src_emb: Some(&a),
            tgt_emb: Some(&b),
            ..Default::default()
        };
        let s = score_pairs(Measure::Cosine, &res).unwrap();
        for i in 0..3 {
            assert_eq!(s[i], cosine(a.row(i), b.row(i)).value);
        }
    }

    #[test]
    fn missing_resources_are_config_errors() {
        let res = ScoringResources::default();
        for m in Measure::ALL {
            assert!(matches!(score_pairs(m, &res), Err(Error::Config(_))), "{m}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = random_matrix(3, 2, &mut rng);
        let res = ScoringResources {
            src_emb: Some(&a),
            tgt_emb: Some(&a),
            ..Default::default()
        };
        assert!(matches!(score_pairs(Measure::Mlp, &res), Err(Error::Config(_))));
    }

    #[test]
    fn cross_matches_pairwise_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_matrix(10, 6, &mut rng);
        let b = random_matrix(10, 6, &mut rng);
        let ta = words(10, &mut rng);
        let tb = words(10, &mut rng);
        let mlp = MlpParams::glorot(&[12, 8, 1], &mut rng).unwrap();
        let res = ScoringResources {
            src_emb: Some(&a),
            tgt_emb: Some(&b),
            csls: CslsConfig { k: 3 },
            mlp: Some(&mlp),
            src_text: Some(&ta),
            tgt_text: Some(&tb),
            posterior: None,
        };
        for m in [Measure::Cosine, Measure::Euclidean, Measure::Csls, Measure::Mlp, Measure::Levenshtein] {
            let cross = score_cross_matrix(m, &res, 4, 1).unwrap();
            let penalties = (
                knn_penalties(&a, &b, 3).unwrap(),
                knn_penalties(&b, &a, 3).unwrap(),
            );
            for i in 0..10 {
                for j in 0..10 {
                    let expected = match m {
                        Measure::Cosine => cosine(a.row(i), b.row(j)).value,
                        Measure::Euclidean => euclidean_sim(a.row(i), b.row(j)),
                        Measure::Csls => {
                            2.0 * cosine(a.row(i), b.row(j)).value - penalties.0[i] - penalties.1[j]
                        }
                        Measure::Mlp => super::super::mlp_forward(&mlp, a.row(i), b.row(j)).unwrap(),
                        Measure::Levenshtein => levenshtein_sim(&ta[i], &tb[j]),
                        Measure::Posterior => unreachable!(),
                    };
                    assert!((cross[[i, j]] - expected).abs() < 1e-12, "{m} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn block_size_and_threads_do_not_change_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(23, 5, &mut rng);
        let b = random_matrix(17, 5, &mut rng);
        let res = ScoringResources {
            src_emb: Some(&a),
            tgt_emb: Some(&b),
            csls: CslsConfig { k: 4 },
            ..Default::default()
        };
        for m in [Measure::Cosine, Measure::Csls, Measure::Euclidean] {
            let reference = score_cross_matrix(m, &res, 23, 1).unwrap();
            for (block, threads) in [(1, 1), (5, 4), (7, 2), (100, 3)] {
                assert_eq!(score_cross_matrix(m, &res, block, threads).unwrap(), reference, "{m}");
            }
        }
    }

    #[test]
    fn posterior_cross_matches_pairwise_and_combines() {
        use crate::model::{Direction, Hyper};
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let hyper = Hyper {
            hidden_size: 6,
            emb_size: 4,
            vocab_size: 9,
            direction: Direction::SrcToTgt,
        };
        let fwd = EmbedModelParams::random(hyper, &mut rng);
        let bwd = EmbedModelParams::random(
            Hyper {
                direction: Direction::TgtToSrc,
                ..hyper
            },
            &mut rng,
        );
        let seq = |rng: &mut ChaCha8Rng| -> Vec<u32> { (0..rng.gen_range(1..5)).map(|_| rng.gen_range(4..9)).collect() };
        let src: Vec<Vec<u32>> = (0..4).map(|_| seq(&mut rng)).collect();
        let tgt: Vec<Vec<u32>> = (0..4).map(|_| seq(&mut rng)).collect();
        let models = [fwd.clone(), bwd.clone()];
        for combine in [PosteriorCombine::Sum, PosteriorCombine::Mean] {
            let res = ScoringResources {
                posterior: Some(PosteriorResources {
                    models: &models,
                    src_tokens: &src,
                    tgt_tokens: &tgt,
                    combine,
                }),
                ..Default::default()
            };
            let cross = score_cross_matrix(Measure::Posterior, &res, 3, 2).unwrap();
            let pairs = score_pairs(Measure::Posterior, &res).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let mut e = crate::model::posterior_score(&fwd, &src[i], &tgt[j]).unwrap()
                        + crate::model::posterior_score(&bwd, &src[i], &tgt[j]).unwrap();
                    if combine == PosteriorCombine::Mean {
                        e /= 2.0;
                    }
                    assert!((cross[[i, j]] - e).abs() < 1e-10);
                    assert!(cross[[i, j]] <= 0.0);
                }
                assert!((pairs[i] - cross[[i, i]]).abs() < 1e-10);
            }
        }
        assert!(fwd.all_finite());
    }

    #[test]
    fn measure_names_roundtrip() {
        for m in Measure::ALL {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
        }
        assert!("dot".parse::<Measure>().is_err());
    }
}

use ndarray::{concatenate, Array2, ArrayView2, Axis};

use super::{EmbedModelParams, Side, TrainBatch};
use crate::numerics::{
    gather_rows, gru_backward, gru_forward, log_softmax_rows, masked_maxpool, scatter_add_rows,
    GruStepCache,
};
use crate::textprep::{BOS, EOS, PAD};
use crate::{Error, Result};

/// A max-pooled encoder output, tagged with the encoder that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceEmbedding {
    pub vector: Vec<f64>,
    pub side: Side,
}

/// Sequences laid out time-major with PAD beyond each row's length.
struct Padded {
    ids: Vec<Vec<u32>>,
    mask: Vec<Vec<bool>>,
    lengths: Vec<usize>,
}

impl Padded {
    fn new<F>(batch: usize, lengths: Vec<usize>, token: F) -> Self
    where
        F: Fn(usize, usize) -> u32,
    {
        let steps = lengths.iter().copied().max().unwrap_or(0);
        let mut ids = Vec::with_capacity(steps);
        let mut mask = Vec::with_capacity(steps);
        for t in 0..steps {
            ids.push((0..batch).map(|b| if t < lengths[b] { token(b, t) } else { PAD }).collect());
            mask.push((0..batch).map(|b| t < lengths[b]).collect());
        }
        Self { ids, mask, lengths }
    }

    fn steps(&self) -> usize {
        self.ids.len()
    }
}

fn check_tokens(seqs: &[&[u32]], vocab: usize, what: &str) -> Result<()> {
    for (b, s) in seqs.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::Contract(format!("{what} {b} is empty")));
        }
        if let Some(&bad) = s.iter().find(|&&id| id as usize >= vocab) {
            return Err(Error::Index(format!(
                "{what} {b} has token id {bad} for a vocabulary of {vocab}"
            )));
        }
    }
    Ok(())
}

/// Rows where `mask` is false keep their previous state.
fn keep_masked(next: &mut Array2<f64>, prev: &Array2<f64>, mask: &[bool]) {
    for (b, &m) in mask.iter().enumerate() {
        if !m {
            next.row_mut(b).assign(&prev.row(b));
        }
    }
}

fn zero_masked(g: &Array2<f64>, mask: &[bool]) -> Array2<f64> {
    let mut g = g.clone();
    for (b, &m) in mask.iter().enumerate() {
        if !m {
            g.row_mut(b).fill(0.0);
        }
    }
    g
}

pub(crate) struct EncoderTrace {
    side: Side,
    padded: Padded,
    fwd: Vec<GruStepCache>,
    bwd: Vec<GruStepCache>,
    winner: Array2<usize>,
}

pub(crate) fn encoder_forward(
    params: &EmbedModelParams,
    side: Side,
    seqs: &[&[u32]],
) -> Result<(Array2<f64>, EncoderTrace)> {
    check_tokens(seqs, params.hyper.vocab_size, "input sentence")?;
    let batch = seqs.len();
    let padded = Padded::new(batch, seqs.iter().map(|s| s.len()).collect(), |b, t| seqs[b][t]);
    let steps = padded.steps();
    let emb = params.embedding(side).view();
    let enc = params.encoder(side);
    let half = enc.fwd.hidden_dim();

    let mut fwd_states = Vec::with_capacity(steps);
    let mut fwd_caches = Vec::with_capacity(steps);
    let mut h = Array2::zeros((batch, half));
    for t in 0..steps {
        let x = gather_rows(emb, &padded.ids[t]);
        let (mut next, cache) = gru_forward(&enc.fwd, x.view(), h.view())?;
        keep_masked(&mut next, &h, &padded.mask[t]);
        h = next;
        fwd_states.push(h.clone());
        fwd_caches.push(cache);
    }

    let mut bwd_states = vec![Array2::zeros((0, 0)); steps];
    let mut bwd_caches = Vec::with_capacity(steps);
    let mut g = Array2::zeros((batch, half));
    for t in (0..steps).rev() {
        let x = gather_rows(emb, &padded.ids[t]);
        let (mut next, cache) = gru_forward(&enc.bwd, x.view(), g.view())?;
        keep_masked(&mut next, &g, &padded.mask[t]);
        g = next;
        bwd_states[t] = g.clone();
        bwd_caches.push(cache);
    }
    bwd_caches.reverse();

    let states: Vec<Array2<f64>> = fwd_states
        .iter()
        .zip(&bwd_states)
        .map(|(f, b)| concatenate![Axis(1), *f, *b])
        .collect();
    let (pooled, winner) = masked_maxpool(&states, &padded.lengths)?;
    Ok((
        pooled,
        EncoderTrace {
            side,
            padded,
            fwd: fwd_caches,
            bwd: bwd_caches,
            winner,
        },
    ))
}

pub(crate) fn encoder_backward(
    params: &EmbedModelParams,
    trace: &EncoderTrace,
    d_pooled: ArrayView2<f64>,
    grads: &mut EmbedModelParams,
) {
    let enc = params.encoder(trace.side);
    let half = enc.fwd.hidden_dim();
    let steps = trace.padded.steps();
    let batch = d_pooled.nrows();

    let mut d_fwd = vec![Array2::<f64>::zeros((batch, half)); steps];
    let mut d_bwd = vec![Array2::<f64>::zeros((batch, half)); steps];
    for ((b, d), &t) in trace.winner.indexed_iter() {
        if d < half {
            d_fwd[t][[b, d]] += d_pooled[[b, d]];
        } else {
            d_bwd[t][[b, d - half]] += d_pooled[[b, d]];
        }
    }

    let (g_emb, g_enc) = grads.encoder_parts_mut(trace.side);
    let mut dh = Array2::<f64>::zeros((batch, half));
    for t in (0..steps).rev() {
        dh += &d_fwd[t];
        let mask = &trace.padded.mask[t];
        let g_in = zero_masked(&dh, mask);
        let (dx, mut dprev) = gru_backward(&enc.fwd, &trace.fwd[t], g_in.view(), &mut g_enc.fwd);
        scatter_add_rows(g_emb, &trace.padded.ids[t], dx.view(), mask);
        keep_masked(&mut dprev, &dh, mask);
        dh = dprev;
    }
    let mut dg = Array2::<f64>::zeros((batch, half));
    for t in 0..steps {
        dg += &d_bwd[t];
        let mask = &trace.padded.mask[t];
        let g_in = zero_masked(&dg, mask);
        let (dx, mut dprev) = gru_backward(&enc.bwd, &trace.bwd[t], g_in.view(), &mut g_enc.bwd);
        scatter_add_rows(g_emb, &trace.padded.ids[t], dx.view(), mask);
        keep_masked(&mut dprev, &dg, mask);
        dg = dprev;
    }
}

/// Per-row results of a teacher-forced decoder pass.
pub(crate) struct DecodeResult {
    /// `Σ_i log p(y_i | y_<i, s_0)` per row, EOS included.
    pub logprob: Vec<f64>,
    /// Number of predicted positions per row (output length + 1 for EOS).
    pub positions: Vec<usize>,
    /// Gradient w.r.t. `s_0`, when requested.
    pub d_s0: Option<Array2<f64>>,
}

/// Teacher-forced decoding from `s0` (`[batch, D]`). With `grads`, the loss
/// `scale · Σ_rows −logprob` is backpropagated into `grads` and `d_s0`.
pub(crate) fn decoder_pass(
    params: &EmbedModelParams,
    s0: &Array2<f64>,
    outputs: &[&[u32]],
    grads: Option<(&mut EmbedModelParams, f64)>,
) -> Result<DecodeResult> {
    check_tokens(outputs, params.hyper.vocab_size, "output sentence")?;
    let batch = outputs.len();
    if s0.dim() != (batch, params.hyper.hidden_size) {
        return Err(Error::Shape(format!(
            "decoder start state is {:?}, expected ({batch}, {})",
            s0.dim(),
            params.hyper.hidden_size
        )));
    }
    let positions: Vec<usize> = outputs.iter().map(|o| o.len() + 1).collect();
    let inputs = Padded::new(batch, positions.clone(), |b, t| if t == 0 { BOS } else { outputs[b][t - 1] });
    let targets = Padded::new(batch, positions.clone(), |b, t| {
        outputs[b].get(t).copied().unwrap_or(EOS)
    });
    let steps = inputs.steps();
    let keep = grads.is_some();

    let mut s = s0.clone();
    let mut logprob = vec![0.0; batch];
    let mut states = Vec::new();
    let mut caches = Vec::new();
    let mut logps = Vec::new();
    for t in 0..steps {
        let x = gather_rows(params.dec_emb.view(), &inputs.ids[t]);
        let (mut next, cache) = gru_forward(&params.dec, x.view(), s.view())?;
        keep_masked(&mut next, &s, &inputs.mask[t]);
        s = next;
        let mut logits = s.dot(&params.out_w);
        logits += &params.out_b;
        log_softmax_rows(&mut logits);
        for b in 0..batch {
            if inputs.mask[t][b] {
                logprob[b] += logits[[b, targets.ids[t][b] as usize]];
            }
        }
        if keep {
            states.push(s.clone());
            caches.push(cache);
            logps.push(logits);
        }
    }
    if logprob.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite decoder log-probability".into()));
    }

    let d_s0 = match grads {
        None => None,
        Some((g, scale)) => {
            let mut ds = Array2::<f64>::zeros((batch, params.hyper.hidden_size));
            for t in (0..steps).rev() {
                let mask = &inputs.mask[t];
                let mut dlogits = logps[t].mapv(f64::exp);
                for b in 0..batch {
                    if mask[b] {
                        dlogits[[b, targets.ids[t][b] as usize]] -= 1.0;
                        dlogits.row_mut(b).mapv_inplace(|v| v * scale);
                    } else {
                        dlogits.row_mut(b).fill(0.0);
                    }
                }
                ndarray::linalg::general_mat_mul(1.0, &states[t].t(), &dlogits, 1.0, &mut g.out_w);
                g.out_b += &dlogits.sum_axis(Axis(0)).insert_axis(Axis(0));
                ndarray::linalg::general_mat_mul(1.0, &dlogits, &params.out_w.t(), 1.0, &mut ds);
                let g_in = zero_masked(&ds, mask);
                let (dx, mut dprev) = gru_backward(&params.dec, &caches[t], g_in.view(), &mut g.dec);
                scatter_add_rows(&mut g.dec_emb, &inputs.ids[t], dx.view(), mask);
                keep_masked(&mut dprev, &ds, mask);
                ds = dprev;
            }
            Some(ds)
        }
    };
    Ok(DecodeResult {
        logprob,
        positions,
        d_s0,
    })
}

/// Embeds one sentence with the chosen encoder.
pub fn encode(params: &EmbedModelParams, tokens: &[u32], side: Side) -> Result<SentenceEmbedding> {
    let (pooled, _) = encoder_forward(params, side, &[tokens])?;
    Ok(SentenceEmbedding {
        vector: pooled.row(0).to_vec(),
        side,
    })
}

/// Embeds a batch of sentences; row `i` is the embedding of `seqs[i]`.
pub fn encode_batch(params: &EmbedModelParams, seqs: &[&[u32]], side: Side) -> Result<Array2<f64>> {
    Ok(encoder_forward(params, side, seqs)?.0)
}

/// Embeds a whole corpus in chunks of `chunk` sentences. Sentences are sorted by
/// length inside the computation to limit padding; output rows follow input order.
pub fn encode_corpus(
    params: &EmbedModelParams,
    seqs: &[&[u32]],
    side: Side,
    chunk: usize,
) -> Result<Array2<f64>> {
    let mut order: Vec<usize> = (0..seqs.len()).collect();
    order.sort_by_key(|&i| (seqs[i].len(), i));
    let mut out = Array2::zeros((seqs.len(), params.hyper.hidden_size));
    for ids in order.chunks(chunk.max(1)) {
        let batch: Vec<&[u32]> = ids.iter().map(|&i| seqs[i]).collect();
        let emb = encode_batch(params, &batch, side)?;
        for (r, &i) in ids.iter().enumerate() {
            out.row_mut(i).assign(&emb.row(r));
        }
    }
    Ok(out)
}

/// Gradients of a single decoder loss.
#[derive(Debug, Clone)]
pub struct DecodeGrads {
    pub embedding: Vec<f64>,
    pub params: EmbedModelParams,
}

/// Teacher-forced cross-entropy of `output` given `s_0 = embedding`, summed over
/// positions (EOS included).
pub fn decode_loss(
    params: &EmbedModelParams,
    embedding: &SentenceEmbedding,
    output: &[u32],
) -> Result<(f64, DecodeGrads)> {
    let d = params.hyper.hidden_size;
    if embedding.vector.len() != d {
        return Err(Error::Shape(format!(
            "embedding has dimension {}, model has {d}",
            embedding.vector.len()
        )));
    }
    let s0 = Array2::from_shape_vec((1, d), embedding.vector.clone()).expect("row");
    let mut grads = EmbedModelParams::zeros(params.hyper);
    let res = decoder_pass(params, &s0, &[output], Some((&mut grads, 1.0)))?;
    let d_s0 = res.d_s0.expect("requested gradients");
    Ok((
        -res.logprob[0],
        DecodeGrads {
            embedding: d_s0.row(0).to_vec(),
            params: grads,
        },
    ))
}

fn groups(batch: &TrainBatch) -> Result<Vec<(Side, Vec<&[u32]>, Vec<&[u32]>)>> {
    let mut out = Vec::new();
    for side in [Side::Source, Side::Target] {
        let (inputs, outputs): (Vec<&[u32]>, Vec<&[u32]>) = batch
            .examples()
            .filter(|e| e.side == side)
            .map(|e| (e.input.as_slice(), e.output.as_slice()))
            .unzip();
        if !inputs.is_empty() {
            out.push((side, inputs, outputs));
        }
    }
    if out.is_empty() {
        return Err(Error::Contract("empty training batch".into()));
    }
    Ok(out)
}

/// Mean per-sentence loss over the batch and its gradient.
pub fn batch_loss_and_grads(
    params: &EmbedModelParams,
    batch: &TrainBatch,
) -> Result<(f64, EmbedModelParams)> {
    let scale = 1.0 / batch.len() as f64;
    let mut grads = EmbedModelParams::zeros(params.hyper);
    let mut total = 0.0;
    for (side, inputs, outputs) in groups(batch)? {
        let (s0, trace) = encoder_forward(params, side, &inputs)?;
        let res = decoder_pass(params, &s0, &outputs, Some((&mut grads, scale)))?;
        total -= res.logprob.iter().sum::<f64>();
        let d_s0 = res.d_s0.expect("requested gradients");
        encoder_backward(params, &trace, d_s0.view(), &mut grads);
    }
    let loss = total * scale;
    if !loss.is_finite() {
        return Err(Error::Numerical(format!("non-finite batch loss {loss}")));
    }
    Ok((loss, grads))
}

/// Mean per-sentence loss over the batch, without gradients.
pub fn batch_loss(params: &EmbedModelParams, batch: &TrainBatch) -> Result<f64> {
    let mut total = 0.0;
    for (side, inputs, outputs) in groups(batch)? {
        let (s0, _) = encoder_forward(params, side, &inputs)?;
        let res = decoder_pass(params, &s0, &outputs, None)?;
        total -= res.logprob.iter().sum::<f64>();
    }
    Ok(total / batch.len() as f64)
}

/// Length-normalised log posterior `(1/(I+1)) Σ_i log p(e_i | e_<i, f)` of the
/// decoder-language sentence given the other one. For a `tgt2src` model the roles
/// of `source` and `target` swap.
pub fn posterior_score(params: &EmbedModelParams, source: &[u32], target: &[u32]) -> Result<f64> {
    let (input, output) = match params.hyper.decoder_side() {
        Side::Target => (source, target),
        Side::Source => (target, source),
    };
    Ok(posterior_scores_for_source(params, input, &[output])?[0])
}

/// Scores many decoder-language candidates against one encoded input sentence. The
/// input goes through the encoder of the non-decoder language.
pub fn posterior_scores_for_source(
    params: &EmbedModelParams,
    input: &[u32],
    candidates: &[&[u32]],
) -> Result<Vec<f64>> {
    let side = params.hyper.decoder_side().other();
    let (pooled, _) = encoder_forward(params, side, &[input])?;
    let s0 = pooled
        .broadcast((candidates.len(), pooled.ncols()))
        .expect("broadcast one row")
        .to_owned();
    posterior_scores_from_states(params, &s0, candidates)
}

/// Length-normalised log posterior of `outputs[i]` decoded from start state
/// `s0.row(i)`.
pub fn posterior_scores_from_states(
    params: &EmbedModelParams,
    s0: &Array2<f64>,
    outputs: &[&[u32]],
) -> Result<Vec<f64>> {
    let res = decoder_pass(params, s0, outputs, None)?;
    Ok(res
        .logprob
        .iter()
        .zip(&res.positions)
        .map(|(lp, &n)| lp / n as f64)
        .collect())
}

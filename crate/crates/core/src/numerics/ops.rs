use ndarray::{Array2, ArrayView2, Axis};

use crate::{Error, Result};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Element-wise max over a nonempty sequence of equal-length vectors.
pub fn maxpool_time(states: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = states
        .first()
        .ok_or_else(|| Error::Contract("max-pooling needs at least one state".into()))?;
    let mut out = first.clone();
    for (t, v) in states.iter().enumerate().skip(1) {
        if v.len() != out.len() {
            return Err(Error::Shape(format!(
                "state {t} has dimension {} but state 0 has {}",
                v.len(),
                out.len()
            )));
        }
        for (o, &x) in out.iter_mut().zip(v) {
            if x > *o {
                *o = x;
            }
        }
    }
    Ok(out)
}

/// Batched, length-masked max-pool over time.
///
/// `states[t]` is `[batch, dim]`; row `b` only considers `t < lengths[b]`.
/// Returns the pooled `[batch, dim]` matrix and, per entry, the time step that won
/// (earliest on ties), which routes the gradient in the backward pass.
pub fn masked_maxpool(
    states: &[Array2<f64>],
    lengths: &[usize],
) -> Result<(Array2<f64>, Array2<usize>)> {
    let first = states
        .first()
        .ok_or_else(|| Error::Contract("max-pooling needs at least one time step".into()))?;
    let (batch, dim) = first.dim();
    if lengths.len() != batch {
        return Err(Error::Shape(format!(
            "{} lengths for a batch of {batch}",
            lengths.len()
        )));
    }
    let mut pooled = Array2::from_elem((batch, dim), f64::NEG_INFINITY);
    let mut winner = Array2::zeros((batch, dim));
    for (b, &len) in lengths.iter().enumerate() {
        if len == 0 || len > states.len() {
            return Err(Error::Contract(format!(
                "row {b} has length {len}, expected 1..={}",
                states.len()
            )));
        }
        for (t, st) in states.iter().take(len).enumerate() {
            for d in 0..dim {
                let v = st[[b, d]];
                if v > pooled[[b, d]] || t == 0 {
                    pooled[[b, d]] = v;
                    winner[[b, d]] = t;
                }
            }
        }
    }
    Ok((pooled, winner))
}

/// `−log softmax(logits)[target]` and its gradient `softmax − onehot(target)`.
pub fn softmax_xent(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    if target >= logits.len() {
        return Err(Error::Index(format!(
            "target {target} for {} classes",
            logits.len()
        )));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut grad: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = grad.iter().sum();
    let loss = z.ln() - (logits[target] - max);
    for g in grad.iter_mut() {
        *g /= z;
    }
    grad[target] -= 1.0;
    Ok((loss, grad))
}

/// Row-wise log-softmax, numerically stabilised by max subtraction.
pub fn log_softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.axis_iter_mut(Axis(0)) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = row.iter().map(|&l| (l - max).exp()).sum::<f64>().ln() + max;
        row.mapv_inplace(|l| l - lse);
    }
}

/// Embedding lookup: `out[b] = table[ids[b]]`.
pub fn gather_rows(table: ArrayView2<f64>, ids: &[u32]) -> Array2<f64> {
    let mut out = Array2::zeros((ids.len(), table.ncols()));
    for (mut row, &id) in out.axis_iter_mut(Axis(0)).zip(ids) {
        row.assign(&table.row(id as usize));
    }
    out
}

/// Backward of [`gather_rows`]: `grad[ids[b]] += d[b]` for rows where `mask[b]`.
pub fn scatter_add_rows(grad: &mut Array2<f64>, ids: &[u32], d: ArrayView2<f64>, mask: &[bool]) {
    for (b, &id) in ids.iter().enumerate() {
        if mask[b] {
            let mut row = grad.row_mut(id as usize);
            row += &d.row(b);
        }
    }
}

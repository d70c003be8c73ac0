use std::cmp::Ordering;

use ndarray::{Array2, ArrayView2, Axis};

use super::measures::DEGENERATE_NORM;
use crate::{Error, Result};

/// `n × D` embeddings, one row per sentence, with cached row norms.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: Array2<f64>,
    norms: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(data: Array2<f64>) -> Self {
        let norms = data
            .axis_iter(Axis(0))
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        Self { data, norms }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("embedding rows differ in dimension".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Ok(Self::new(
            Array2::from_shape_vec((rows.len(), dim), flat).expect("shape checked"),
        ))
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }

    /// Rows scaled to unit length; degenerate rows become zero, so their cosine with
    /// anything is 0.
    pub fn normalized_rows(&self, start: usize, end: usize) -> Array2<f64> {
        let mut out = self.data.slice(ndarray::s![start..end, ..]).to_owned();
        for (mut row, &n) in out.axis_iter_mut(Axis(0)).zip(&self.norms[start..end]) {
            if n < DEGENERATE_NORM {
                row.fill(0.0);
            } else {
                row.mapv_inplace(|v| v / n);
            }
        }
        out
    }

    fn check_compatible(&self, other: &EmbeddingMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!(
                "embedding dimensions differ: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CslsConfig {
    /// Neighbours averaged in each penalty term.
    pub k: usize,
}

impl Default for CslsConfig {
    fn default() -> Self {
        Self { k: 10 }
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Contract(format!(
            "K = {k} must be in 1..={n} (size of the neighbour set)"
        )));
    }
    Ok(())
}

/// Descending by value, then ascending by index.
fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Mean of the `k` largest values (ties broken by lower index), summed in rank order.
pub fn top_k_mean(values: &[f64], k: usize) -> Result<f64> {
    check_k(k, values.len())?;
    let mut idx: Vec<(usize, f64)> = values.iter().copied().enumerate().collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, rank_order);
        idx.truncate(k);
    }
    idx.sort_by(rank_order);
    Ok(idx.iter().map(|(_, v)| v).sum::<f64>() / k as f64)
}

/// Cosine matrix between rows `start..end` of `queries` and all of `keys`.
pub fn cosine_block(queries: &EmbeddingMatrix, start: usize, end: usize, keys: &EmbeddingMatrix) -> Array2<f64> {
    let q = queries.normalized_rows(start, end);
    let k = keys.normalized_rows(0, keys.n());
    q.dot(&k.t())
}

const PENALTY_BLOCK: usize = 512;

/// For each query row, the mean cosine to its `k` nearest keys.
pub fn knn_penalties(queries: &EmbeddingMatrix, keys: &EmbeddingMatrix, k: usize) -> Result<Vec<f64>> {
    queries.check_compatible(keys)?;
    check_k(k, keys.n())?;
    let mut out = Vec::with_capacity(queries.n());
    let mut start = 0;
    while start < queries.n() {
        let end = (start + PENALTY_BLOCK).min(queries.n());
        let block = cosine_block(queries, start, end, keys);
        for row in block.axis_iter(Axis(0)) {
            out.push(top_k_mean(row.as_slice().expect("row-major block"), k)?);
        }
        start = end;
    }
    Ok(out)
}

/// `2·cos(a, b) − r_tgt(a) − r_src(b)`, where `r_tgt(a)` is the mean cosine of `a` to
/// its `K` nearest rows of `tgt_set` and `r_src(b)` likewise against `src_set`.
pub fn csls(
    a: &[f64],
    b: &[f64],
    src_set: &EmbeddingMatrix,
    tgt_set: &EmbeddingMatrix,
    cfg: CslsConfig,
) -> Result<f64> {
    if a.len() != tgt_set.dim() || b.len() != src_set.dim() || a.len() != b.len() {
        return Err(Error::Shape("csls arguments have mismatched dimensions".into()));
    }
    let to_tgt: Vec<f64> = (0..tgt_set.n())
        .map(|j| super::cosine(a, tgt_set.row(j)).value)
        .collect();
    let to_src: Vec<f64> = (0..src_set.n())
        .map(|i| super::cosine(src_set.row(i), b).value)
        .collect();
    let r_a = top_k_mean(&to_tgt, cfg.k)?;
    let r_b = top_k_mean(&to_src, cfg.k)?;
    Ok(2.0 * super::cosine(a, b).value - r_a - r_b)
}

/// CSLS for a block of precomputed cosines: `out[i][j] = 2·cos[i][j] − r_src[i] − r_tgt[j]`
/// where `r_src[i]` is the penalty of source row `i` (against targets) and `r_tgt[j]`
/// that of target row `j` (against sources).
pub fn csls_block(cos: ArrayView2<f64>, src_penalty: &[f64], tgt_penalty: &[f64]) -> Array2<f64> {
    let mut out = cos.mapv(|c| 2.0 * c);
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = *v - src_penalty[i] - tgt_penalty[j];
        }
    }
    out
}

//! The trainable similarity classifier: `q([a; b])` through ReLU hidden layers and a
//! sigmoid output, fitted with binary cross-entropy and Adam.

use std::path::Path;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EmbeddingMatrix;
use crate::container::{self, TensorReader};
use crate::numerics::{sigmoid, ParamSet, Tensor2};
use crate::{Error, Result};

pub const MLP_MAGIC: &[u8; 4] = b"MLP1";

/// Layer `l` maps `sizes[l] → sizes[l+1]` with weight `[in, out]` and bias `[1, out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    weights: Vec<Tensor2>,
    biases: Vec<Tensor2>,
}

impl MlpParams {
    /// All-zero parameters for layer sizes `sizes` (input first, `1` last).
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(Self {
            weights: sizes.windows(2).map(|w| Array2::zeros((w[0], w[1]))).collect(),
            biases: sizes.windows(2).map(|w| Array2::zeros((1, w[1]))).collect(),
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(sizes)?;
        for w in &mut p.weights {
            let limit = (6.0 / (w.nrows() + w.ncols()) as f64).sqrt();
            w.mapv_inplace(|_| rng.gen_range(-limit..limit));
        }
        Ok(p)
    }

    /// `[2D, h1, …, 1]`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![self.weights[0].nrows()];
        out.extend(self.weights.iter().map(|w| w.ncols()));
        out
    }

    /// Sentence-embedding dimension `D` (half the input width).
    pub fn embedding_dim(&self) -> usize {
        self.weights[0].nrows() / 2
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(&self.sizes()).expect("sizes already valid")
    }

    /// Output logits for a batch of concatenated inputs `[B, 2D]`.
    fn logits(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward_from(x.dot(&self.weights[0]), 0)
    }

    /// Continues the forward pass from the pre-activation of layer `layer`.
    fn forward_from(&self, mut pre: Array2<f64>, layer: usize) -> Array2<f64> {
        pre += &self.biases[layer];
        for l in layer + 1..self.weights.len() {
            pre.mapv_inplace(relu);
            pre = pre.dot(&self.weights[l]) + &self.biases[l];
        }
        pre
    }

    /// Scores row-aligned pairs `(a_i, b_i)`.
    pub fn score_rows(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Vec<f64>> {
        self.check_inputs(a.ncols(), b.ncols())?;
        if a.nrows() != b.nrows() {
            return Err(Error::Shape(format!(
                "pairwise scoring needs equal row counts, got {} and {}",
                a.nrows(),
                b.nrows()
            )));
        }
        let x = concatenate(Axis(1), &[a, b]).expect("row counts checked");
        Ok(self.logits(x.view()).iter().map(|&l| sigmoid(l)).collect())
    }

    /// Scores every `(a_i, b_j)`: returns an `a.nrows() × b.nrows()` matrix.
    ///
    /// The first layer splits as `[a; b]·W = a·W_a + b·W_b`, so each side's product is
    /// computed once rather than once per pair.
    pub fn score_cross(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_inputs(a.ncols(), b.ncols())?;
        let d = self.embedding_dim();
        let pa = a.dot(&self.weights[0].slice(s![..d, ..]));
        let pb = b.dot(&self.weights[0].slice(s![d.., ..]));
        let (n, m) = (a.nrows(), b.nrows());
        let mut out = Array2::zeros((n, m));
        for i in 0..n {
            let pre = &pb + &pa.slice(s![i..i + 1, ..]);
            let logits = self.forward_from(pre, 0);
            for (o, &l) in out.row_mut(i).iter_mut().zip(logits.iter()) {
                *o = sigmoid(l);
            }
        }
        Ok(out)
    }

    fn check_inputs(&self, da: usize, db: usize) -> Result<()> {
        let d = self.embedding_dim();
        if da != d || db != d {
            return Err(Error::Shape(format!(
                "MLP expects {d}-dimensional embeddings, got {da} and {db}"
            )));
        }
        Ok(())
    }
}

impl ParamSet for MlpParams {
    fn tensors(&self) -> Vec<(String, &Tensor2)> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            out.push((format!("layer{l}.w"), w));
            out.push((format!("layer{l}.b"), b));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        out
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) || sizes[sizes.len() - 1] != 1 {
        return Err(Error::Config(format!(
            "MLP layer sizes {sizes:?} must be positive and end in 1"
        )));
    }
    if !sizes[0].is_multiple_of(2) {
        return Err(Error::Config(format!(
            "MLP input width {} must be even (two concatenated embeddings)",
            sizes[0]
        )));
    }
    Ok(())
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Logistic loss from a logit: `−y·ln σ(l) − (1−y)·ln(1−σ(l))`, computed stably.
fn bce_with_logit(l: f64, y: f64) -> f64 {
    l.max(0.0) - l * y + (-l.abs()).exp().ln_1p()
}

/// `q([a; b])` for one pair.
pub fn mlp_forward(params: &MlpParams, a: &[f64], b: &[f64]) -> Result<f64> {
    let av = ArrayView2::from_shape((1, a.len()), a).expect("1×n view");
    let bv = ArrayView2::from_shape((1, b.len()), b).expect("1×n view");
    Ok(params.score_rows(av, bv)?[0])
}

/// Mean binary cross-entropy over a batch of concatenated inputs with their labels,
/// and its gradient.
pub fn mlp_loss_and_grads(params: &MlpParams, x: ArrayView2<f64>, labels: &[f64]) -> Result<(f64, MlpParams)> {
    if x.ncols() != params.weights[0].nrows() || x.nrows() != labels.len() || labels.is_empty() {
        return Err(Error::Shape(format!(
            "MLP batch is {:?} with {} labels, expected width {}",
            x.dim(),
            labels.len(),
            params.weights[0].nrows()
        )));
    }
    let layers = params.weights.len();
    // Inputs to each layer (post-activation of the previous one).
    let mut inputs: Vec<Array2<f64>> = Vec::with_capacity(layers);
    let mut act = x.to_owned();
    for l in 0..layers {
        let pre = act.dot(&params.weights[l]) + &params.biases[l];
        inputs.push(act);
        act = if l + 1 < layers { pre.mapv(relu) } else { pre };
    }
    let logits = act;
    let batch = labels.len() as f64;
    let mut loss = 0.0;
    let mut delta = Array2::zeros(logits.raw_dim());
    for (i, (&l, &y)) in logits.iter().zip(labels).enumerate() {
        loss += bce_with_logit(l, y);
        delta[[i, 0]] = (sigmoid(l) - y) / batch;
    }
    loss /= batch;
    if !loss.is_finite() {
        return Err(Error::Numerical(format!("MLP loss is {loss}")));
    }

    let mut grads = params.zeros_like();
    for l in (0..layers).rev() {
        grads.weights[l].assign(&inputs[l].t().dot(&delta));
        grads.biases[l].assign(&delta.sum_axis(Axis(0)).insert_axis(Axis(0)));
        if l > 0 {
            let mut d_in = delta.dot(&params.weights[l].t());
            // Zipping with the stored post-ReLU input: its zeros mark inactive units.
            ndarray::Zip::from(&mut d_in)
                .and(&inputs[l])
                .for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
            delta = d_in;
        }
    }
    Ok((loss, grads))
}

/// Positive (parallel) and negative pairs of sentence embeddings, row-aligned.
#[derive(Debug, Clone)]
pub struct LabeledPairs {
    pub pos_src: EmbeddingMatrix,
    pub pos_tgt: EmbeddingMatrix,
    pub neg_src: EmbeddingMatrix,
    pub neg_tgt: EmbeddingMatrix,
}

impl LabeledPairs {
    pub fn new(
        pos_src: EmbeddingMatrix,
        pos_tgt: EmbeddingMatrix,
        neg_src: EmbeddingMatrix,
        neg_tgt: EmbeddingMatrix,
    ) -> Result<Self> {
        let d = pos_src.dim();
        if [&pos_tgt, &neg_src, &neg_tgt].iter().any(|m| m.dim() != d) {
            return Err(Error::Shape("labelled pairs mix embedding dimensions".into()));
        }
        if pos_src.n() != pos_tgt.n() || neg_src.n() != neg_tgt.n() {
            return Err(Error::Shape("labelled pair sides have different row counts".into()));
        }
        Ok(Self {
            pos_src,
            pos_tgt,
            neg_src,
            neg_tgt,
        })
    }

    pub fn dim(&self) -> usize {
        self.pos_src.dim()
    }

    /// Concatenated inputs `[a; b]` (positives first) and their labels.
    pub fn design_matrix(&self) -> (Array2<f64>, Vec<f64>) {
        let pos = concatenate(Axis(1), &[self.pos_src.data().view(), self.pos_tgt.data().view()])
            .expect("row counts checked");
        let neg = concatenate(Axis(1), &[self.neg_src.data().view(), self.neg_tgt.data().view()])
            .expect("row counts checked");
        let x = concatenate(Axis(0), &[pos.view(), neg.view()]).expect("widths match");
        let mut labels = vec![1.0; self.pos_src.n()];
        labels.resize(self.pos_src.n() + self.neg_src.n(), 0.0);
        (x, labels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpTrainConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    /// Mini-batch steps, not epochs.
    pub max_updates: usize,
    pub seed: u64,
}

impl Default for MlpTrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![512, 512],
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 200,
            max_updates: 1000,
            seed: 1,
        }
    }
}

impl MlpTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.hidden.contains(&0) {
            return Err(Error::Config("MLP batch size and hidden sizes must be positive".into()));
        }
        if !(self.learning_rate > 0.0)
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.epsilon > 0.0)
        {
            return Err(Error::Config("invalid Adam hyperparameters".into()));
        }
        Ok(())
    }
}

/// Fits the classifier with Adam on seeded, per-epoch shuffled mini-batches (the last
/// batch of an epoch may be short).
pub fn mlp_train(pairs: &LabeledPairs, config: &MlpTrainConfig) -> Result<MlpParams> {
    config.validate()?;
    if pairs.pos_src.n() == 0 || pairs.neg_src.n() == 0 {
        return Err(Error::Contract(
            "MLP training needs both positive and negative pairs".into(),
        ));
    }
    let mut sizes = vec![2 * pairs.dim()];
    sizes.extend(&config.hidden);
    sizes.push(1);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = MlpParams::glorot(&sizes, &mut rng)?;
    let mut m = params.zeros_like();
    let mut v = params.zeros_like();

    let (x, labels) = pairs.design_matrix();
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let mut cursor = order.len();
    for t in 1..=config.max_updates {
        if cursor >= order.len() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let idx = &order[cursor..(cursor + config.batch_size).min(order.len())];
        cursor += idx.len();
        let xb = x.select(Axis(0), idx);
        let yb: Vec<f64> = idx.iter().map(|&i| labels[i]).collect();
        let (_, grads) = mlp_loss_and_grads(&params, xb.view(), &yb)?;

        let bc1 = 1.0 - config.beta1.powi(t as i32);
        let bc2 = 1.0 - config.beta2.powi(t as i32);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(m.tensors_mut())
            .zip(v.tensors_mut())
        {
            ndarray::Zip::from(p)
                .and(g.1)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = config.beta1 * *m + (1.0 - config.beta1) * g;
                    *v = config.beta2 * *v + (1.0 - config.beta2) * g * g;
                    *p -= config.learning_rate * (*m / bc1) / ((*v / bc2).sqrt() + config.epsilon);
                });
        }
        if !params.all_finite() {
            return Err(Error::Numerical(format!("MLP parameters diverged at update {t}")));
        }
    }
    Ok(params)
}

#[derive(Serialize, Deserialize)]
struct MlpMeta {
    sizes: Vec<usize>,
}

pub fn save_mlp(params: &MlpParams, path: &Path) -> Result<()> {
    let meta = serde_json::to_value(MlpMeta { sizes: params.sizes() }).expect("meta serializes");
    container::write_file(path, &container::encode(MLP_MAGIC, meta, &params.tensors()))
}

pub fn load_mlp(path: &Path) -> Result<MlpParams> {
    let bytes = container::read_file(path)?;
    let (manifest, tensors) = container::decode(MLP_MAGIC, &bytes)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let meta: MlpMeta = serde_json::from_value(manifest.meta)
        .map_err(|e| Error::Format(format!("{}: MLP metadata: {e}", path.display())))?;
    let mut params = MlpParams::zeros(&meta.sizes)?;
    let mut reader = TensorReader::new(tensors);
    let names: Vec<(String, (usize, usize))> = params
        .tensors()
        .iter()
        .map(|(n, t)| (n.clone(), t.dim()))
        .collect();
    for ((name, shape), slot) in names.into_iter().zip(params.tensors_mut()) {
        *slot = reader.take(&name, shape)?;
    }
    reader.finish()?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grad_check;

    fn cluster(n: usize, d: usize, center: f64, rng: &mut ChaCha8Rng) -> EmbeddingMatrix {
        EmbeddingMatrix::new(Array2::from_shape_simple_fn((n, d), || {
            center + rng.gen_range(-0.5..0.5)
        }))
    }

    /// Positives near (+u, +u), negatives near (+u, −u).
    fn separable(n: usize, seed: u64) -> LabeledPairs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LabeledPairs::new(
            cluster(n, 4, 1.0, &mut rng),
            cluster(n, 4, 1.0, &mut rng),
            cluster(n, 4, 1.0, &mut rng),
            cluster(n, 4, -1.0, &mut rng),
        )
        .unwrap()
    }

    fn small_config() -> MlpTrainConfig {
        MlpTrainConfig {
            hidden: vec![16, 16],
            max_updates: 300,
            batch_size: 32,
            ..Default::default()
        }
    }

    fn accuracy(params: &MlpParams, pairs: &LabeledPairs) -> f64 {
        let (x, labels) = pairs.design_matrix();
        let logits = params.logits(x.view());
        let correct = logits
            .iter()
            .zip(&labels)
            .filter(|(&l, &y)| (sigmoid(l) > 0.5) == (y > 0.5))
            .count();
        correct as f64 / labels.len() as f64
    }

    #[test]
    fn zero_weights_give_half() {
        let p = MlpParams::zeros(&[6, 5, 1]).unwrap();
        assert_eq!(mlp_forward(&p, &[1.0, 2.0, 3.0], &[-4.0, 5.0, 0.5]).unwrap(), 0.5);
        assert!(mlp_forward(&p, &[1.0], &[2.0]).is_err());
    }

    #[test]
    fn output_in_open_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = MlpParams::glorot(&[4, 8, 8, 1], &mut rng).unwrap();
        for _ in 0..50 {
            let a: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let q = mlp_forward(&p, &a, &b).unwrap();
            assert!(q > 0.0 && q < 1.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = MlpParams::glorot(&[6, 7, 5, 1], &mut rng).unwrap();
        let x = Array2::from_shape_simple_fn((9, 6), || rng.gen_range(-1.0..1.0));
        let y: Vec<f64> = (0..9).map(|i| (i % 2) as f64).collect();
        let (_, grads) = mlp_loss_and_grads(&p, x.view(), &y).unwrap();
        let report = grad_check(&p, &grads, |q| Ok(mlp_loss_and_grads(q, x.view(), &y)?.0), 1e-6).unwrap();
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[test]
    fn separable_task_is_learned() {
        let train = separable(200, 1);
        let held_out = separable(100, 2);
        let p = mlp_train(&train, &small_config()).unwrap();
        assert!(accuracy(&p, &held_out) >= 0.95);
    }

    #[test]
    fn duplicated_training_set_gives_similar_accuracy() {
        let train = separable(200, 4);
        let held_out = separable(100, 5);
        let doubled = |m: &EmbeddingMatrix| {
            EmbeddingMatrix::new(concatenate(Axis(0), &[m.data().view(), m.data().view()]).unwrap())
        };
        let twice = LabeledPairs::new(
            doubled(&train.pos_src),
            doubled(&train.pos_tgt),
            doubled(&train.neg_src),
            doubled(&train.neg_tgt),
        )
        .unwrap();
        let a = accuracy(&mlp_train(&train, &small_config()).unwrap(), &held_out);
        let b = accuracy(&mlp_train(&twice, &small_config()).unwrap(), &held_out);
        assert!((a - b).abs() <= 0.02, "{a} vs {b}");
    }

    #[test]
    fn positives_only_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let empty = EmbeddingMatrix::new(Array2::zeros((0, 4)));
        let pairs = LabeledPairs::new(
            cluster(10, 4, 1.0, &mut rng),
            cluster(10, 4, 1.0, &mut rng),
            empty.clone(),
            empty,
        )
        .unwrap();
        assert!(mlp_train(&pairs, &small_config()).is_err());
    }

    #[test]
    fn deterministic_and_roundtrips() {
        let train = separable(50, 7);
        let cfg = MlpTrainConfig {
            max_updates: 20,
            ..small_config()
        };
        let a = mlp_train(&train, &cfg).unwrap();
        let b = mlp_train(&train, &cfg).unwrap();
        assert_eq!(a, b);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mlp");
        save_mlp(&a, &path).unwrap();
        let loaded = load_mlp(&path).unwrap();
        assert_eq!(loaded.sizes(), a.sizes());
        // Stored as f32.
        for ((_, x), (_, y)) in loaded.tensors().iter().zip(a.tensors()) {
            for (u, v) in x.iter().zip(y.iter()) {
                assert!((u - v).abs() <= 1e-6 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn cross_scores_match_pairwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = MlpParams::glorot(&[6, 10, 4, 1], &mut rng).unwrap();
        let a = Array2::from_shape_simple_fn((5, 3), || rng.gen_range(-1.0..1.0));
        let b = Array2::from_shape_simple_fn((4, 3), || rng.gen_range(-1.0..1.0));
        let cross = p.score_cross(a.view(), b.view()).unwrap();
        for i in 0..5 {
            for j in 0..4 {
                let q = mlp_forward(&p, a.row(i).as_slice().unwrap(), b.row(j).as_slice().unwrap()).unwrap();
                assert!((cross[[i, j]] - q).abs() < 1e-12);
            }
        }
    }
}

//! Differentiable kernels with hand-written gradients.
//!
//! Everything here works on row-major `f64` matrices. Batched kernels take a
//! `[batch, features]` matrix and treat each row independently, so a single
//! vector is just a batch of one.

mod gradcheck;
mod gru;
mod ops;
mod sgd;

pub use gradcheck::{grad_check, GradCheckReport};
pub use gru::{gru_backward, gru_forward, gru_step, GruCellParams, GruStepCache};
pub use ops::{
    gather_rows, log_softmax_rows, maxpool_time, masked_maxpool, scatter_add_rows, sigmoid,
    softmax_xent,
};
pub use sgd::{clip_global_norm, global_norm, sgd_step, SgdSchedule};

use ndarray::Array2;
use rand::Rng;

/// A dense matrix of model values. Biases are stored as `1 × n` rows.
pub type Tensor2 = Array2<f64>;

/// Uniform initialisation range for recurrent, linear and embedding weights.
pub const INIT_RANGE: f64 = 0.08;

/// Fills a new `rows × cols` tensor with draws from `uniform(-range, range)`.
pub fn uniform_tensor<R: Rng + ?Sized>(rows: usize, cols: usize, range: f64, rng: &mut R) -> Tensor2 {
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-range..range))
}

/// A fixed, ordered collection of named tensors.
///
/// The order returned by [`ParamSet::tensors`] and [`ParamSet::tensors_mut`] must
/// agree; it is the serialization order of checkpoints and the iteration order of
/// the optimizer.
pub trait ParamSet {
    fn tensors(&self) -> Vec<(String, &Tensor2)>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor2>;

    fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

//! The shared-decoder embedding model.
//!
//! Two bidirectional GRU encoders (one per language) each produce per-position
//! states `h_j ∈ R^D` by concatenating a forward and a backward half of size `D/2`.
//! Their element-wise max over positions is the sentence embedding, and it is fed
//! unchanged as the initial state `s_0` of a single GRU decoder with a softmax
//! output layer. The decoder never sees the input otherwise, so whatever it needs
//! to generate the output has to be in the embedding.
//!
//! Training mixes translation examples (source encoder → target sentence) with
//! autoencoding examples (target encoder → the same target sentence) 1:1 in every
//! batch. The reverse direction swaps the roles of the two languages.

mod batch;
mod checkpoint;
mod config;
mod forward;
mod params;
mod train;

pub use batch::{BatchStream, Example, TrainBatch};
pub use checkpoint::{
    checkpoint_from_bytes, checkpoint_to_bytes, load_checkpoint, save_checkpoint, Checkpoint,
    CHECKPOINT_MAGIC,
};
pub use config::{parse_kv_text, Direction, TrainConfig, TRAIN_CONFIG_KEYS};
pub use forward::{
    batch_loss, batch_loss_and_grads, decode_loss, encode, encode_batch, encode_corpus,
    posterior_score, posterior_scores_for_source, posterior_scores_from_states, DecodeGrads, SentenceEmbedding,
};
pub use params::{BiGruParams, EmbedModelParams, Hyper, Side};
pub use train::{init_params, train, train_step, StepStats, TrainEvent};

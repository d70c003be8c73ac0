use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{batch_loss_and_grads, BatchStream, EmbedModelParams, Hyper, TrainBatch, TrainConfig};
use crate::numerics::{clip_global_norm, sgd_step, SgdSchedule};
use crate::textprep::{ParallelCorpus, Sentence, WordEmbeddingTable};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub lr: f64,
    /// Gradient norm before clipping.
    pub grad_norm: f64,
}

/// Accumulates the gradient of both objectives over `batch`, clips it to
/// `grad_clip` global norm and applies one SGD update.
pub fn train_step(
    params: &mut EmbedModelParams,
    batch: &TrainBatch,
    schedule: &SgdSchedule,
    update_index: u64,
    grad_clip: f64,
) -> Result<StepStats> {
    let (loss, mut grads) = batch_loss_and_grads(params, batch)?;
    let grad_norm = clip_global_norm(&mut grads, grad_clip);
    if !grad_norm.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite gradient norm at update {update_index}"
        )));
    }
    let lr = sgd_step(params, &grads, schedule, update_index)?;
    Ok(StepStats { loss, lr, grad_norm })
}

/// Fresh parameters for `hyper`, optionally with word embeddings copied from a
/// pre-trained table into every embedding layer.
pub fn init_params(hyper: Hyper, seed: u64, table: Option<&WordEmbeddingTable>) -> Result<EmbedModelParams> {
    hyper.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = EmbedModelParams::random(hyper, &mut rng);
    if let Some(t) = table {
        params.init_word_embeddings(&t.matrix)?;
    }
    Ok(params)
}

pub enum TrainEvent<'a> {
    /// Emitted after every update; `updates` counts updates done so far.
    Step { updates: u64, stats: StepStats },
    /// Emitted every `checkpoint_every` updates.
    Checkpoint { updates: u64, params: &'a EmbedModelParams },
}

/// Runs updates `start_update..config.max_updates`.
///
/// The batch stream is replayed from the beginning and fast-forwarded past the
/// first `start_update` batches, so a resumed run sees the same batches as an
/// uninterrupted one.
pub fn train(
    parallel: &ParallelCorpus,
    mono: &[Sentence],
    config: &TrainConfig,
    mut params: EmbedModelParams,
    start_update: u64,
    observer: &mut dyn FnMut(TrainEvent<'_>) -> Result<()>,
) -> Result<(EmbedModelParams, u64)> {
    config.validate()?;
    if params.hyper.direction != config.direction {
        return Err(Error::Config(format!(
            "model was built for {} but config asks for {}",
            params.hyper.direction, config.direction
        )));
    }
    if start_update >= config.max_updates {
        return Ok((params, start_update));
    }
    let mut stream = BatchStream::new(
        parallel,
        mono,
        config.direction,
        config.batch_size,
        config.seed,
    )?;
    for _ in 0..start_update {
        stream.next();
    }
    let mut updates = start_update;
    while updates < config.max_updates {
        let batch = stream.next().expect("endless stream");
        let stats = train_step(&mut params, &batch, &config.schedule, updates, config.grad_clip)?;
        updates += 1;
        observer(TrainEvent::Step { updates, stats })?;
        if config.checkpoint_every > 0 && updates.is_multiple_of(config.checkpoint_every) {
            observer(TrainEvent::Checkpoint {
                updates,
                params: &params,
            })?;
        }
    }
    Ok((params, updates))
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmbedModelParams, Hyper};
use crate::container::{self, TensorReader};
use crate::numerics::ParamSet;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"BSE1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: EmbedModelParams,
    pub vocab_hash: String,
    /// Updates applied so far; resuming continues the learning-rate schedule here.
    pub updates: u64,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    hyper: Hyper,
    vocab_hash: String,
    updates: u64,
}

pub fn checkpoint_to_bytes(params: &EmbedModelParams, vocab_hash: &str, updates: u64) -> Vec<u8> {
    let meta = Meta {
        hyper: params.hyper,
        vocab_hash: vocab_hash.to_string(),
        updates,
    };
    container::encode(
        CHECKPOINT_MAGIC,
        serde_json::to_value(meta).expect("meta serializes"),
        &params.tensors(),
    )
}

/// Decodes a checkpoint. With `expected_vocab_hash`, refuses checkpoints trained on
/// another vocabulary.
pub fn checkpoint_from_bytes(bytes: &[u8], expected_vocab_hash: Option<&str>) -> Result<Checkpoint> {
    let (manifest, tensors) = container::decode(CHECKPOINT_MAGIC, bytes)?;
    let meta: Meta = serde_json::from_value(manifest.meta)
        .map_err(|e| Error::Format(format!("checkpoint manifest: {e}")))?;
    if let Some(expected) = expected_vocab_hash {
        if expected != meta.vocab_hash {
            return Err(Error::Format(format!(
                "vocabulary hash mismatch: checkpoint was trained with {}, supplied vocabulary is {expected}",
                meta.vocab_hash
            )));
        }
    }
    meta.hyper.validate()?;
    let mut params = EmbedModelParams::zeros(meta.hyper);
    let shapes = EmbedModelParams::expected_shapes(meta.hyper);
    let mut reader = TensorReader::new(tensors);
    for (slot, (name, shape)) in params.tensors_mut().into_iter().zip(shapes) {
        *slot = reader.take(&name, shape)?;
    }
    reader.finish()?;
    Ok(Checkpoint {
        params,
        vocab_hash: meta.vocab_hash,
        updates: meta.updates,
    })
}

pub fn save_checkpoint(
    params: &EmbedModelParams,
    vocab_hash: &str,
    updates: u64,
    path: impl AsRef<Path>,
) -> Result<()> {
    container::write_file(path.as_ref(), &checkpoint_to_bytes(params, vocab_hash, updates))
}

pub fn load_checkpoint(path: impl AsRef<Path>, expected_vocab_hash: Option<&str>) -> Result<Checkpoint> {
    let path = path.as_ref();
    checkpoint_from_bytes(&container::read_file(path)?, expected_vocab_hash).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        e => e,
    })
}

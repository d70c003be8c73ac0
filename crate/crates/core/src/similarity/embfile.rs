//! `EMB1` embedding files and score TSVs.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::EmbeddingMatrix;
use crate::{Error, Result};

pub const EMB_MAGIC: &[u8; 4] = b"EMB1";

/// Writes `magic, u64 n, u64 D, n·D f32` (all little-endian, row-major).
pub fn write_embeddings(path: &Path, m: &EmbeddingMatrix) -> Result<()> {
    let data = m.data();
    let mut bytes = Vec::with_capacity(20 + data.len() * 4);
    bytes.extend_from_slice(EMB_MAGIC);
    bytes.extend_from_slice(&(m.n() as u64).to_le_bytes());
    bytes.extend_from_slice(&(m.dim() as u64).to_le_bytes());
    for &v in data.iter() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_embeddings(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    if bytes.len() < 20 || &bytes[..4] != EMB_MAGIC {
        return Err(Error::Format("not an EMB1 embedding file".into()));
    }
    let n = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes")) as usize;
    let d = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::Format(format!("implausible header n={n} D={d}")))?;
    if bytes.len() - 20 != expected {
        return Err(Error::Format(format!(
            "header says {n}×{d} ({expected} payload bytes) but file has {}",
            bytes.len() - 20
        )));
    }
    let values: Vec<f64> = bytes[20..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    Ok(EmbeddingMatrix::new(
        Array2::from_shape_vec((n, d), values).expect("size checked"),
    ))
}

/// `line_index<TAB>score` with six decimals, one line per score.
pub fn write_scores_tsv(mut out: impl Write, scores: &[f64]) -> std::io::Result<()> {
    for (i, s) in scores.iter().enumerate() {
        writeln!(out, "{i}\t{s:.6}")?;
    }
    Ok(())
}

/// Reads a file written by [`write_scores_tsv`]; indices must run `0, 1, 2, …`.
pub fn read_scores_tsv(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut scores = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let (idx, score) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected index<TAB>score"))?;
        if idx.trim().parse::<usize>().ok() != Some(scores.len()) {
            return Err(Error::parse(path, i + 1, format!("expected index {}", scores.len())));
        }
        let v = score
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        scores.push(v);
    }
    Ok(scores)
}

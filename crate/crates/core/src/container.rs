//! The binary tensor container shared by model checkpoints (`BSE1`) and MLP
//! parameter files (`MLP1`).
//!
//! Layout: 4-byte magic, little-endian `u64` manifest length, UTF-8 JSON manifest,
//! then one raw little-endian `f32` blob per tensor in manifest order, row-major.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::numerics::Tensor2;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub meta: serde_json::Value,
    pub tensors: Vec<TensorEntry>,
}

pub fn encode(magic: &[u8; 4], meta: serde_json::Value, tensors: &[(String, &Tensor2)]) -> Vec<u8> {
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        meta,
        tensors: tensors
            .iter()
            .map(|(name, t)| TensorEntry {
                name: name.clone(),
                shape: vec![t.nrows(), t.ncols()],
                dtype: "f32".into(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&manifest).expect("manifest serializes");
    let payload: usize = tensors.iter().map(|(_, t)| t.len() * 4).sum();
    let mut out = Vec::with_capacity(12 + json.len() + payload);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, t) in tensors {
        for &v in t.iter() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode(magic: &[u8; 4], bytes: &[u8]) -> Result<(Manifest, Vec<(String, Tensor2)>)> {
    if bytes.len() < 12 || &bytes[..4] != magic {
        return Err(Error::Format(format!(
            "bad magic: expected {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let len = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes")) as usize;
    let json = bytes
        .get(12..12 + len)
        .ok_or_else(|| Error::Format("truncated manifest".into()))?;
    let manifest: Manifest =
        serde_json::from_slice(json).map_err(|e| Error::Format(format!("manifest: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            manifest.format_version
        )));
    }

    let mut offset = 12 + len;
    let mut tensors = Vec::with_capacity(manifest.tensors.len());
    for entry in &manifest.tensors {
        if entry.dtype != "f32" || entry.shape.len() != 2 {
            return Err(Error::Format(format!(
                "tensor {} has unsupported dtype {} / rank {}",
                entry.name,
                entry.dtype,
                entry.shape.len()
            )));
        }
        let count = entry.shape[0] * entry.shape[1];
        let blob = bytes.get(offset..offset + 4 * count).ok_or_else(|| {
            Error::Format(format!(
                "truncated file: tensor {} missing ({} bytes needed, {} available)",
                entry.name,
                4 * count,
                bytes.len().saturating_sub(offset)
            ))
        })?;
        let data: Vec<f64> = blob
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        let t = Array2::from_shape_vec((entry.shape[0], entry.shape[1]), data)
            .expect("shape matches element count");
        tensors.push((entry.name.clone(), t));
        offset += 4 * count;
    }
    if offset != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after last tensor",
            bytes.len() - offset
        )));
    }
    Ok((manifest, tensors))
}

/// Pops tensors in manifest order, checking names and shapes.
pub struct TensorReader {
    tensors: std::vec::IntoIter<(String, Tensor2)>,
}

impl TensorReader {
    pub fn new(tensors: Vec<(String, Tensor2)>) -> Self {
        Self {
            tensors: tensors.into_iter(),
        }
    }

    pub fn take(&mut self, name: &str, shape: (usize, usize)) -> Result<Tensor2> {
        let (found, t) = self
            .tensors
            .next()
            .ok_or_else(|| Error::Format(format!("missing tensor {name}")))?;
        if found != name {
            return Err(Error::Format(format!("expected tensor {name}, found {found}")));
        }
        if t.dim() != shape {
            return Err(Error::Shape(format!(
                "tensor {name} is {:?}, manifest hyperparameters imply {:?}",
                t.dim(),
                shape
            )));
        }
        Ok(t)
    }

    pub fn finish(mut self) -> Result<()> {
        match self.tensors.next() {
            None => Ok(()),
            Some((name, _)) => Err(Error::Format(format!("unexpected extra tensor {name}"))),
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn roundtrip_and_truncation() {
        let a = array![[1.0, 2.5], [-3.0, 0.125]];
        let b = array![[7.0]];
        let bytes = encode(
            b"TST1",
            serde_json::json!({"k": 3}),
            &[("a".into(), &a), ("b".into(), &b)],
        );
        let (manifest, tensors) = decode(b"TST1", &bytes).unwrap();
        assert_eq!(manifest.meta["k"], 3);
        assert_eq!(tensors[0].1, a);
        assert_eq!(tensors[1].1, b);

        let err = decode(b"TST1", &bytes[..bytes.len() - 2]).unwrap_err();
        assert!(err.to_string().contains("tensor b missing"), "{err}");
        assert!(decode(b"XXXX", &bytes).is_err());
    }
}

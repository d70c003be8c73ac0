use std::io::BufRead;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;

use super::Vocabulary;
use crate::numerics::INIT_RANGE;
use crate::{Error, Result};

/// Vocabulary-aligned word vectors. `covered[i]` is false for rows that were not in
/// the file and were randomly initialised instead.
#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbeddingTable {
    pub matrix: Array2<f64>,
    pub covered: Vec<bool>,
}

impl WordEmbeddingTable {
    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn coverage(&self) -> usize {
        self.covered.iter().filter(|&&c| c).count()
    }
}

/// Reads a word2vec text file (`"V D"` header, then `word v1 … vD` per line).
pub fn load_word_embeddings<R: Rng + ?Sized>(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    rng: &mut R,
) -> Result<WordEmbeddingTable> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_word_embeddings(std::io::BufReader::new(f), &path.display().to_string(), vocab, rng)
}

pub fn parse_word_embeddings<B: BufRead, R: Rng + ?Sized>(
    reader: B,
    label: &str,
    vocab: &Vocabulary,
    rng: &mut R,
) -> Result<WordEmbeddingTable> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(label, e))?,
        None => return Err(Error::parse(label, 1, "missing \"V D\" header")),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (rows, dim) = match fields.as_slice() {
        [v, d] => match (v.parse::<usize>(), d.parse::<usize>()) {
            (Ok(v), Ok(d)) if d > 0 => (v, d),
            _ => return Err(Error::parse(label, 1, format!("malformed header {header:?}"))),
        },
        _ => return Err(Error::parse(label, 1, format!("malformed header {header:?}"))),
    };

    let mut matrix = Array2::zeros((vocab.len(), dim));
    let mut covered = vec![false; vocab.len()];
    let mut seen = 0;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(label, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("nonempty line");
        let values: Vec<&str> = parts.collect();
        if values.len() != dim {
            return Err(Error::parse(
                label,
                lineno,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        seen += 1;
        let Some(id) = vocab.get(word) else { continue };
        if covered[id as usize] {
            continue;
        }
        for (d, v) in values.iter().enumerate() {
            matrix[[id as usize, d]] = v
                .parse::<f64>()
                .map_err(|_| Error::parse(label, lineno, format!("bad number {v:?}")))?;
        }
        covered[id as usize] = true;
    }
    if seen != rows {
        return Err(Error::parse(
            label,
            seen + 2,
            format!("header declares {rows} rows, file has {seen}"),
        ));
    }
    for (id, c) in covered.iter().enumerate() {
        if !c {
            for d in 0..dim {
                matrix[[id, d]] = rng.gen_range(-INIT_RANGE..INIT_RANGE);
            }
        }
    }
    Ok(WordEmbeddingTable { matrix, covered })
}

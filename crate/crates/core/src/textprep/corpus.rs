use std::path::Path;

use super::{BpeModel, Vocabulary};
use crate::{Error, Result};

/// A tokenized sentence plus its surface text and the 0-based line it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<u32>,
    pub surface: String,
    pub line: usize,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Whitespace-token count of the surface line.
    pub fn word_count(&self) -> usize {
        self.surface.split_whitespace().count()
    }
}

/// Borrowed token ids of each sentence, in order.
pub fn token_slices(sentences: &[Sentence]) -> Vec<&[u32]> {
    sentences.iter().map(|s| s.tokens.as_slice()).collect()
}

/// Line-aligned bilingual corpus; `source[i]` pairs with `target[i]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParallelCorpus {
    pub source: Vec<Sentence>,
    pub target: Vec<Sentence>,
}

impl ParallelCorpus {
    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }
}

/// Lowercasing, optional BPE and the length cap applied to every line.
#[derive(Debug, Clone)]
pub struct Preprocess {
    pub lowercase: bool,
    /// Maximum token count after segmentation.
    pub max_len: usize,
    pub bpe: Option<BpeModel>,
}

impl Default for Preprocess {
    fn default() -> Self {
        Self {
            lowercase: true,
            max_len: 60,
            bpe: None,
        }
    }
}

impl Preprocess {
    /// Lowercases (if enabled) and then segments; without a BPE model tokens are the
    /// whitespace words.
    pub fn tokenize(&self, line: &str) -> Vec<String> {
        let text = if self.lowercase {
            line.to_lowercase()
        } else {
            line.to_string()
        };
        match &self.bpe {
            Some(bpe) => bpe.apply(&text),
            None => text.split_whitespace().map(String::from).collect(),
        }
    }

    fn admits(&self, tokens: &[String]) -> bool {
        !tokens.is_empty() && tokens.len() <= self.max_len
    }
}

pub fn normalize_whitespace(line: &str) -> String {
    line.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn read_lines(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(String::from).collect())
}

/// Pairs lines by index and drops a pair when either side is empty or longer than
/// `max_len` tokens. Surviving sentences remember their original line.
pub fn parallel_from_lines<S: AsRef<str>>(
    src: &[S],
    tgt: &[S],
    pre: &Preprocess,
    vocab: &Vocabulary,
) -> Result<ParallelCorpus> {
    if src.len() != tgt.len() {
        return Err(Error::Format(format!(
            "line count mismatch: source has {} lines, target has {}",
            src.len(),
            tgt.len()
        )));
    }
    let mut corpus = ParallelCorpus::default();
    for (line, (s, t)) in src.iter().zip(tgt).enumerate() {
        let (s, t) = (s.as_ref(), t.as_ref());
        let st = pre.tokenize(s);
        let tt = pre.tokenize(t);
        if !pre.admits(&st) || !pre.admits(&tt) {
            continue;
        }
        corpus.source.push(Sentence {
            tokens: vocab.encode(&st),
            surface: s.to_string(),
            line,
        });
        corpus.target.push(Sentence {
            tokens: vocab.encode(&tt),
            surface: t.to_string(),
            line,
        });
    }
    Ok(corpus)
}

pub fn mono_from_lines<S: AsRef<str>>(lines: &[S], pre: &Preprocess, vocab: &Vocabulary) -> Vec<Sentence> {
    lines
        .iter()
        .enumerate()
        .filter_map(|(line, s)| {
            let toks = pre.tokenize(s.as_ref());
            pre.admits(&toks).then(|| Sentence {
                tokens: vocab.encode(&toks),
                surface: s.as_ref().to_string(),
                line,
            })
        })
        .collect()
}

pub fn load_parallel_corpus(
    src_path: impl AsRef<Path>,
    tgt_path: impl AsRef<Path>,
    pre: &Preprocess,
    vocab: &Vocabulary,
) -> Result<ParallelCorpus> {
    let src = read_lines(&src_path)?;
    let tgt = read_lines(&tgt_path)?;
    parallel_from_lines(&src, &tgt, pre, vocab).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!(
            "{} / {}: {msg}",
            src_path.as_ref().display(),
            tgt_path.as_ref().display()
        )),
        e => e,
    })
}

pub fn load_mono_corpus(path: impl AsRef<Path>, pre: &Preprocess, vocab: &Vocabulary) -> Result<Vec<Sentence>> {
    Ok(mono_from_lines(&read_lines(path)?, pre, vocab))
}

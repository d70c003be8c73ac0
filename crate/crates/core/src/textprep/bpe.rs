use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

/// Suffix carried by every word-final subword unit.
pub const END_OF_WORD: &str = "</w>";

type Pair = (String, String);

/// An ordered list of merge operations; earlier merges have higher priority.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BpeModel {
    merges: Vec<Pair>,
    ranks: HashMap<Pair, usize>,
}

impl BpeModel {
    pub fn from_merges(merges: Vec<(String, String)>) -> Result<Self> {
        let mut ranks = HashMap::with_capacity(merges.len());
        for (i, m) in merges.iter().enumerate() {
            if ranks.insert(m.clone(), i).is_some() {
                return Err(Error::Contract(format!(
                    "duplicate merge \"{} {}\" at position {i}",
                    m.0, m.1
                )));
            }
        }
        Ok(Self { merges, ranks })
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// Learns up to `num_merges` merges over all lines jointly.
    ///
    /// Each step merges the most frequent adjacent symbol pair, ties going to the
    /// lexicographically smallest `(left, right)`. Learning stops early once no pair
    /// is left.
    pub fn learn<'a, I>(lines: I, num_merges: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if num_merges == 0 {
            return Err(Error::Contract("num_merges must be >= 1".into()));
        }
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for line in lines {
            for w in line.split_whitespace() {
                *freq.entry(w).or_default() += 1;
            }
        }
        if freq.is_empty() {
            return Err(Error::Contract("cannot learn BPE from an empty corpus".into()));
        }
        let mut vocab: Vec<(&str, u64)> = freq.into_iter().collect();
        vocab.sort_unstable();
        let mut words: Vec<(Vec<String>, i64)> = vocab
            .into_iter()
            .map(|(w, c)| (split_word(w), c as i64))
            .collect();

        let mut counts: HashMap<Pair, i64> = HashMap::new();
        let mut where_: HashMap<Pair, HashSet<usize>> = HashMap::new();
        for (idx, (syms, c)) in words.iter().enumerate() {
            for p in syms.windows(2) {
                let pair = (p[0].clone(), p[1].clone());
                *counts.entry(pair.clone()).or_default() += c;
                where_.entry(pair).or_default().insert(idx);
            }
        }
        let mut queue: BTreeSet<(Reverse<i64>, String, String)> = counts
            .iter()
            .map(|((a, b), &c)| (Reverse(c), a.clone(), b.clone()))
            .collect();

        let mut merges = Vec::new();
        while merges.len() < num_merges {
            let Some((Reverse(count), left, right)) = queue.pop_first() else {
                break;
            };
            if count <= 0 {
                break;
            }
            let pair = (left, right);
            let mut affected: Vec<usize> = where_
                .remove(&pair)
                .map(|s| s.into_iter().collect())
                .unwrap_or_default();
            affected.sort_unstable();

            let mut delta: HashMap<Pair, i64> = HashMap::new();
            for idx in affected {
                let (syms, c) = &mut words[idx];
                let merged = merge_pair(syms, &pair.0, &pair.1);
                if merged.len() == syms.len() {
                    continue;
                }
                for p in syms.windows(2) {
                    *delta.entry((p[0].clone(), p[1].clone())).or_default() -= *c;
                }
                for p in merged.windows(2) {
                    let np = (p[0].clone(), p[1].clone());
                    *delta.entry(np.clone()).or_default() += *c;
                    where_.entry(np).or_default().insert(idx);
                }
                *syms = merged;
            }
            for (p, d) in delta {
                if d == 0 {
                    continue;
                }
                let entry = counts.entry(p.clone()).or_default();
                queue.remove(&(Reverse(*entry), p.0.clone(), p.1.clone()));
                *entry += d;
                if *entry > 0 {
                    queue.insert((Reverse(*entry), p.0.clone(), p.1.clone()));
                }
            }
            counts.remove(&pair);
            merges.push(pair);
        }
        Self::from_merges(merges)
    }

    /// Segments one line into subword units. Whitespace is normalised away; unknown
    /// characters are kept as singleton symbols.
    pub fn apply(&self, line: &str) -> Vec<String> {
        let mut out = Vec::new();
        for w in line.split_whitespace() {
            out.extend(self.apply_word(w));
        }
        out
    }

    fn apply_word(&self, word: &str) -> Vec<String> {
        let mut syms = split_word(word);
        loop {
            let best = syms
                .windows(2)
                .filter_map(|p| self.ranks.get(&(p[0].clone(), p[1].clone())))
                .min()
                .copied();
            let Some(rank) = best else { break };
            let (a, b) = &self.merges[rank];
            syms = merge_pair(&syms, a, b);
        }
        syms
    }

    /// Reads a merges file: one `left right` pair per line, in priority order. A
    /// leading `#version` line is ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut merges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 && line.starts_with("#version") {
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                    merges.push((a.to_string(), b.to_string()))
                }
                _ => return Err(Error::parse(path, i + 1, "expected \"left right\"")),
            }
        }
        Self::from_merges(merges)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        for (a, b) in &self.merges {
            writeln!(f, "{a} {b}").map_err(|e| Error::io(path, e))?;
        }
        f.flush().map_err(|e| Error::io(path, e))
    }
}

fn split_word(word: &str) -> Vec<String> {
    let mut syms: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = syms.last_mut() {
        last.push_str(END_OF_WORD);
    }
    syms
}

fn merge_pair(syms: &[String], a: &str, b: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(syms.len());
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && syms[i] == a && syms[i + 1] == b {
            out.push(format!("{a}{b}"));
            i += 2;
        } else {
            out.push(syms[i].clone());
            i += 1;
        }
    }
    out
}

/// Inverse of [`BpeModel::apply`]: concatenates units and turns end-of-word markers
/// back into single spaces.
pub fn bpe_decode<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for t in tokens {
        let t = t.as_ref();
        match t.strip_suffix(END_OF_WORD) {
            Some(stem) => {
                out.push_str(stem);
                out.push(' ');
            }
            None => out.push_str(t),
        }
    }
    if out.ends_with(' ') {
        out.pop();
    }
    out
}

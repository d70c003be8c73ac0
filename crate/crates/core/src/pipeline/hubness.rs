use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::similarity::{score_cross_matrix, CslsConfig, EmbeddingMatrix, Measure, ScoringResources};
use crate::{Error, Result};

/// How often each sentence is the nearest neighbour of a query from the other set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HubnessReport {
    /// Per target: number of sources whose nearest target it is.
    pub target_in_degree: Vec<usize>,
    /// Per source: number of targets whose nearest source it is.
    pub source_in_degree: Vec<usize>,
}

impl HubnessReport {
    pub fn max_target_in_degree(&self) -> usize {
        self.target_in_degree.iter().copied().max().unwrap_or(0)
    }

    pub fn max_source_in_degree(&self) -> usize {
        self.source_in_degree.iter().copied().max().unwrap_or(0)
    }

    /// `count → number of sentences with that in-degree`, ascending by count.
    pub fn histogram(degrees: &[usize]) -> Vec<(usize, usize)> {
        let max = degrees.iter().copied().max().unwrap_or(0);
        let mut h = vec![0usize; max + 1];
        for &d in degrees {
            h[d] += 1;
        }
        h.into_iter().enumerate().filter(|(_, c)| *c > 0).collect()
    }
}

/// In-degrees of the columns under row-wise argmax (given rows as queries), and of the
/// rows under column-wise argmax. Lowest index wins ties.
pub fn in_degrees(scores: &Array2<f64>) -> HubnessReport {
    let (n, m) = scores.dim();
    let mut target_in_degree = vec![0; m];
    let mut source_in_degree = vec![0; n];
    for row in scores.rows() {
        let mut best = 0;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        if m > 0 {
            target_in_degree[best] += 1;
        }
    }
    for col in scores.columns() {
        let mut best = 0;
        for (i, &v) in col.iter().enumerate() {
            if v > col[best] {
                best = i;
            }
        }
        if n > 0 {
            source_in_degree[best] += 1;
        }
    }
    HubnessReport {
        target_in_degree,
        source_in_degree,
    }
}

/// Nearest-neighbour in-degrees in both directions under an embedding measure
/// (cosine, Euclidean or CSLS).
pub fn hubness_report(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    measure: Measure,
    csls: CslsConfig,
) -> Result<HubnessReport> {
    if src.n() == 0 || tgt.n() == 0 {
        return Err(Error::Contract("hubness needs nonempty sets".into()));
    }
    let res = ScoringResources {
        src_emb: Some(src),
        tgt_emb: Some(tgt),
        csls,
        ..Default::default()
    };
    let scores = score_cross_matrix(measure, &res, src.n(), 1)?;
    Ok(in_degrees(&scores))
}

fn is_hub_configuration(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Result<bool> {
    let k = CslsConfig::default();
    let euclid = hubness_report(a, b, Measure::Euclidean, k)?;
    let cos = hubness_report(a, b, Measure::Cosine, k)?;
    let n = a.n();
    let euclid_hub = euclid.max_source_in_degree() == n || euclid.max_target_in_degree() == n;
    let cos_flat = cos.target_in_degree.iter().all(|&d| d == 1) && cos.source_in_degree.iter().all(|&d| d == 1);
    Ok(euclid_hub && cos_flat)
}

/// Randomized search for `n` two-dimensional source vectors `a` and targets `b` where,
/// under negated Euclidean distance, one source is the nearest neighbour of every
/// target, while under cosine every sentence has in-degree exactly 1 in both
/// directions.
///
/// Candidates pair `a_i` and `b_i` at nearby angles; all `b` and one `a` are short,
/// the other `a` long, so the short `a` sits closest to every `b` in Euclidean terms.
/// Each candidate is checked by brute-force nearest-neighbour search.
pub fn find_hub_configuration(n: usize, seed: u64, max_tries: usize) -> Result<Option<(EmbeddingMatrix, EmbeddingMatrix)>> {
    if n < 2 {
        return Err(Error::Contract("a hub configuration needs at least 2 vectors".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..max_tries {
        let hub = rng.gen_range(0..n);
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for i in 0..n {
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let jitter = rng.gen_range(-0.2..0.2);
            let ra = if i == hub { rng.gen_range(0.1..0.5) } else { rng.gen_range(1.0..4.0) };
            let rb = rng.gen_range(0.1..0.5);
            let round = |v: f64| (v * 1000.0).round() / 1000.0;
            a.push(vec![round(ra * angle.cos()), round(ra * angle.sin())]);
            b.push(vec![
                round(rb * (angle + jitter).cos()),
                round(rb * (angle + jitter).sin()),
            ]);
        }
        let a = EmbeddingMatrix::from_rows(&a)?;
        let b = EmbeddingMatrix::from_rows(&b)?;
        if is_hub_configuration(&a, &b)? {
            return Ok(Some((a, b)));
        }
    }
    Ok(None)
}

/// Lines `a<TAB>x<TAB>y…` for sources and `b<TAB>…` for targets.
pub fn write_configuration(mut out: impl Write, a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> std::io::Result<()> {
    for (tag, m) in [("a", a), ("b", b)] {
        for i in 0..m.n() {
            let cols: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{tag}\t{}", cols.join("\t"))?;
        }
    }
    Ok(())
}

pub fn read_configuration(path: &Path) -> Result<(EmbeddingMatrix, EmbeddingMatrix)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let tag = fields.next().unwrap_or_default();
        let values = fields
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        match tag {
            "a" => a.push(values),
            "b" => b.push(values),
            other => return Err(Error::parse(path, i + 1, format!("unknown set tag {other:?}"))),
        }
    }
    Ok((EmbeddingMatrix::from_rows(&a)?, EmbeddingMatrix::from_rows(&b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_sets_have_unit_in_degree() {
        let eye: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let m = EmbeddingMatrix::from_rows(&eye).unwrap();
        let r = hubness_report(&m, &m, Measure::Cosine, CslsConfig::default()).unwrap();
        assert_eq!(r.target_in_degree, vec![1; 4]);
        assert_eq!(r.source_in_degree, vec![1; 4]);
        assert_eq!(HubnessReport::histogram(&r.target_in_degree), vec![(1, 4)]);
    }

    #[test]
    fn search_finds_verified_configuration() {
        let (a, b) = find_hub_configuration(4, 7, 10_000).unwrap().expect("configuration");
        assert!(is_hub_configuration(&a, &b).unwrap());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hub.tsv");
        let mut buf = Vec::new();
        write_configuration(&mut buf, &a, &b).unwrap();
        std::fs::write(&path, buf).unwrap();
        let (a2, b2) = read_configuration(&path).unwrap();
        assert_eq!((a2, b2), (a, b));
    }
}

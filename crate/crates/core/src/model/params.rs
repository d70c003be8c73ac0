use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Direction;
use crate::numerics::{uniform_tensor, GruCellParams, ParamSet, Tensor2, INIT_RANGE};
use crate::{Error, Result};

/// Which encoder a sentence goes through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Source => Side::Target,
            Side::Target => Side::Source,
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" | "src" => Ok(Side::Source),
            "target" | "tgt" => Ok(Side::Target),
            _ => Err(Error::Config(format!("side must be source or target, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyper {
    /// `D`: embedding and decoder state size. Each encoder direction has `D/2`.
    pub hidden_size: usize,
    /// Word embedding size.
    pub emb_size: usize,
    pub vocab_size: usize,
    pub direction: Direction,
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 || !self.hidden_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "hidden_size must be a positive even number, got {}",
                self.hidden_size
            )));
        }
        if self.emb_size == 0 {
            return Err(Error::Config("emb_size must be >= 1".into()));
        }
        if self.vocab_size <= crate::textprep::RESERVED.len() {
            return Err(Error::Config(format!(
                "vocabulary of {} tokens has no room beyond the reserved ids",
                self.vocab_size
            )));
        }
        Ok(())
    }

    /// The language the shared decoder generates.
    pub fn decoder_side(&self) -> Side {
        match self.direction {
            Direction::SrcToTgt => Side::Target,
            Direction::TgtToSrc => Side::Source,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiGruParams {
    pub fwd: GruCellParams,
    pub bwd: GruCellParams,
}

impl BiGruParams {
    fn zeros(input: usize, half: usize) -> Self {
        Self {
            fwd: GruCellParams::zeros(input, half),
            bwd: GruCellParams::zeros(input, half),
        }
    }

    fn random<R: Rng + ?Sized>(input: usize, half: usize, rng: &mut R) -> Self {
        Self {
            fwd: GruCellParams::random(input, half, rng),
            bwd: GruCellParams::random(input, half, rng),
        }
    }

    fn tensors(&self, prefix: &str) -> Vec<(String, &Tensor2)> {
        let mut v = self.fwd.tensors(&format!("{prefix}.fwd"));
        v.extend(self.bwd.tensors(&format!("{prefix}.bwd")));
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut v = self.fwd.tensors_mut();
        v.extend(self.bwd.tensors_mut());
        v
    }
}

/// All trainable tensors: the two encoders (each with its own word embeddings), and
/// the shared decoder with its word embeddings and output projection.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedModelParams {
    pub hyper: Hyper,
    pub src_emb: Tensor2,
    pub enc_src: BiGruParams,
    pub tgt_emb: Tensor2,
    pub enc_tgt: BiGruParams,
    pub dec_emb: Tensor2,
    pub dec: GruCellParams,
    /// `[D, V]`
    pub out_w: Tensor2,
    /// `[1, V]`
    pub out_b: Tensor2,
}

impl EmbedModelParams {
    pub fn zeros(hyper: Hyper) -> Self {
        let Hyper {
            hidden_size: d,
            emb_size: e,
            vocab_size: v,
            ..
        } = hyper;
        Self {
            hyper,
            src_emb: Array2::zeros((v, e)),
            enc_src: BiGruParams::zeros(e, d / 2),
            tgt_emb: Array2::zeros((v, e)),
            enc_tgt: BiGruParams::zeros(e, d / 2),
            dec_emb: Array2::zeros((v, e)),
            dec: GruCellParams::zeros(e, d),
            out_w: Array2::zeros((d, v)),
            out_b: Array2::zeros((1, v)),
        }
    }

    /// Weights (including word embeddings) from `uniform(-0.08, 0.08)`, biases zero.
    pub fn random<R: Rng + ?Sized>(hyper: Hyper, rng: &mut R) -> Self {
        let Hyper {
            hidden_size: d,
            emb_size: e,
            vocab_size: v,
            ..
        } = hyper;
        Self {
            hyper,
            src_emb: uniform_tensor(v, e, INIT_RANGE, rng),
            enc_src: BiGruParams::random(e, d / 2, rng),
            tgt_emb: uniform_tensor(v, e, INIT_RANGE, rng),
            enc_tgt: BiGruParams::random(e, d / 2, rng),
            dec_emb: uniform_tensor(v, e, INIT_RANGE, rng),
            dec: GruCellParams::random(e, d, rng),
            out_w: uniform_tensor(d, v, INIT_RANGE, rng),
            out_b: Array2::zeros((1, v)),
        }
    }

    pub fn embedding(&self, side: Side) -> &Tensor2 {
        match side {
            Side::Source => &self.src_emb,
            Side::Target => &self.tgt_emb,
        }
    }

    pub fn encoder(&self, side: Side) -> &BiGruParams {
        match side {
            Side::Source => &self.enc_src,
            Side::Target => &self.enc_tgt,
        }
    }

    pub(crate) fn encoder_parts_mut(&mut self, side: Side) -> (&mut Tensor2, &mut BiGruParams) {
        match side {
            Side::Source => (&mut self.src_emb, &mut self.enc_src),
            Side::Target => (&mut self.tgt_emb, &mut self.enc_tgt),
        }
    }

    /// L2 norm over one encoder's tensors (its word embeddings included).
    pub fn encoder_norm(&self, side: Side) -> f64 {
        let prefix = match side {
            Side::Source => "src",
            Side::Target => "tgt",
        };
        let enc_prefix = format!("enc_{prefix}.");
        let emb_name = format!("{prefix}_emb");
        self.tensors()
            .iter()
            .filter(|(n, _)| n.starts_with(&enc_prefix) || *n == emb_name)
            .map(|(_, t)| t.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// L2 norm over the decoder, its word embeddings and the output layer.
    pub fn decoder_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .filter(|(n, _)| n.starts_with("dec") || n.starts_with("out_"))
            .map(|(_, t)| t.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Shapes every tensor must have under `hyper`, in [`ParamSet`] order.
    pub fn expected_shapes(hyper: Hyper) -> Vec<(String, (usize, usize))> {
        Self::zeros(hyper)
            .tensors()
            .into_iter()
            .map(|(n, t)| (n, t.dim()))
            .collect()
    }

    /// Copies a word embedding table into both encoders and the decoder.
    pub fn init_word_embeddings(&mut self, table: &Tensor2) -> Result<()> {
        if table.dim() != self.src_emb.dim() {
            return Err(Error::Shape(format!(
                "word embedding table is {:?}, model expects {:?}",
                table.dim(),
                self.src_emb.dim()
            )));
        }
        self.src_emb.assign(table);
        self.tgt_emb.assign(table);
        self.dec_emb.assign(table);
        Ok(())
    }
}

impl ParamSet for EmbedModelParams {
    fn tensors(&self) -> Vec<(String, &Tensor2)> {
        let mut v = vec![("src_emb".to_string(), &self.src_emb)];
        v.extend(self.enc_src.tensors("enc_src"));
        v.push(("tgt_emb".to_string(), &self.tgt_emb));
        v.extend(self.enc_tgt.tensors("enc_tgt"));
        v.push(("dec_emb".to_string(), &self.dec_emb));
        v.extend(self.dec.tensors("dec"));
        v.push(("out_w".to_string(), &self.out_w));
        v.push(("out_b".to_string(), &self.out_b));
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut v = vec![&mut self.src_emb];
        v.extend(self.enc_src.tensors_mut());
        v.push(&mut self.tgt_emb);
        v.extend(self.enc_tgt.tensors_mut());
        v.push(&mut self.dec_emb);
        v.extend(self.dec.tensors_mut());
        v.push(&mut self.out_w);
        v.push(&mut self.out_b);
        v
    }
}

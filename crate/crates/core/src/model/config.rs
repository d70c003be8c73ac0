use serde::{Deserialize, Serialize};

use crate::numerics::SgdSchedule;
use crate::{Error, Result};

/// Which language is translated into (and therefore autoencoded).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Direction {
    /// Source→target translation plus a target autoencoder.
    #[default]
    #[serde(rename = "src2tgt")]
    SrcToTgt,
    /// Target→source translation plus a source autoencoder.
    #[serde(rename = "tgt2src")]
    TgtToSrc,
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "src2tgt" => Ok(Direction::SrcToTgt),
            "tgt2src" => Ok(Direction::TgtToSrc),
            _ => Err(Error::Config(format!(
                "direction must be src2tgt or tgt2src, got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::SrcToTgt => "src2tgt",
            Direction::TgtToSrc => "tgt2src",
        })
    }
}

/// Keys accepted in a training config file.
pub const TRAIN_CONFIG_KEYS: [&str; 13] = [
    "direction",
    "hidden_size",
    "emb_size",
    "batch_size",
    "max_updates",
    "lr",
    "lr_decay",
    "lr_decay_interval",
    "lr_warmup_updates",
    "seed",
    "max_len",
    "checkpoint_every",
    "grad_clip",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub direction: Direction,
    pub hidden_size: usize,
    pub emb_size: usize,
    pub batch_size: usize,
    pub max_updates: u64,
    pub schedule: SgdSchedule,
    pub seed: u64,
    pub max_len: usize,
    /// 0 disables intermediate checkpoints.
    pub checkpoint_every: u64,
    pub grad_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            direction: Direction::SrcToTgt,
            hidden_size: 64,
            emb_size: 32,
            batch_size: 120,
            max_updates: 800_000,
            schedule: SgdSchedule::default(),
            seed: 1,
            max_len: 60,
            checkpoint_every: 10_000,
            grad_clip: 5.0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl TrainConfig {
    /// Paper-scale sizes: 512-dimensional word embeddings and hidden states.
    pub fn paper_scale() -> Self {
        Self {
            hidden_size: 512,
            emb_size: 512,
            ..Self::default()
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "direction" => self.direction = value.parse()?,
            "hidden_size" => self.hidden_size = parse_num(key, value)?,
            "emb_size" => self.emb_size = parse_num(key, value)?,
            "batch_size" => self.batch_size = parse_num(key, value)?,
            "max_updates" => self.max_updates = parse_num(key, value)?,
            "lr" => self.schedule.initial_lr = parse_num(key, value)?,
            "lr_decay" => self.schedule.decay_factor = parse_num(key, value)?,
            "lr_decay_interval" => self.schedule.decay_interval = parse_num(key, value)?,
            "lr_warmup_updates" => self.schedule.warmup_updates = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "max_len" => self.max_len = parse_num(key, value)?,
            "checkpoint_every" => self.checkpoint_every = parse_num(key, value)?,
            "grad_clip" => self.grad_clip = parse_num(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut cfg = Self::default();
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.hidden_size == 0 || !self.hidden_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "hidden_size must be a positive even number, got {}",
                self.hidden_size
            )));
        }
        if self.emb_size == 0 || self.batch_size == 0 || self.max_len == 0 {
            return Err(Error::Config(
                "emb_size, batch_size and max_len must all be >= 1".into(),
            ));
        }
        if !(self.grad_clip > 0.0) {
            return Err(Error::Config(format!("grad_clip must be > 0, got {}", self.grad_clip)));
        }
        Ok(())
    }
}

/// Parses `key=value` lines. Blank lines and lines starting with `#` are skipped.
pub fn parse_kv_text(text: &str, label: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "{label}:{}: expected key=value, got {line:?}",
                i + 1
            )));
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let pairs = parse_kv_text("# toy\nhidden_size = 16\n\ndirection=tgt2src\nlr=0.5\n", "cfg").unwrap();
        let cfg = TrainConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))).unwrap();
        assert_eq!(cfg.hidden_size, 16);
        assert_eq!(cfg.direction, Direction::TgtToSrc);
        assert_eq!(cfg.schedule.initial_lr, 0.5);
        assert_eq!(cfg.batch_size, 120);
    }

    #[test]
    fn unknown_and_invalid_keys() {
        assert!(matches!(
            TrainConfig::from_pairs([("hiden_size", "8")]),
            Err(Error::Config(_))
        ));
        assert!(TrainConfig::from_pairs([("hidden_size", "7")]).is_err());
        assert!(TrainConfig::from_pairs([("lr", "abc")]).is_err());
        assert!(parse_kv_text("novalue\n", "cfg").is_err());
    }

    #[test]
    fn every_documented_key_is_settable() {
        let mut cfg = TrainConfig::default();
        for k in TRAIN_CONFIG_KEYS {
            let v = if k == "direction" { "src2tgt" } else { "2" };
            cfg.set(k, v).unwrap();
        }
    }
}

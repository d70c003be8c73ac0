use super::ParamSet;
use crate::{Error, Result};

/// Step-decay learning-rate schedule.
///
/// `lr(u) = initial_lr` for `u < warmup_updates`, otherwise
/// `initial_lr · decay_factor^(⌊(u − warmup_updates) / decay_interval⌋ + 1)`.
/// `u` is the zero-based index of the update being applied, so with the defaults the
/// 100 001st update is the first to use `0.9`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdSchedule {
    pub initial_lr: f64,
    pub decay_factor: f64,
    pub warmup_updates: u64,
    pub decay_interval: u64,
}

impl Default for SgdSchedule {
    fn default() -> Self {
        Self {
            initial_lr: 1.0,
            decay_factor: 0.9,
            warmup_updates: 100_000,
            decay_interval: 50_000,
        }
    }
}

impl SgdSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_lr > 0.0) {
            return Err(Error::Config(format!("lr must be > 0, got {}", self.initial_lr)));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(Error::Config(format!(
                "lr_decay must be in (0, 1], got {}",
                self.decay_factor
            )));
        }
        if self.decay_interval == 0 {
            return Err(Error::Config("lr_decay_interval must be >= 1".into()));
        }
        Ok(())
    }

    pub fn lr(&self, update_index: u64) -> f64 {
        if update_index < self.warmup_updates {
            return self.initial_lr;
        }
        let steps = (update_index - self.warmup_updates) / self.decay_interval + 1;
        self.initial_lr * self.decay_factor.powi(steps.min(i32::MAX as u64) as i32)
    }
}

pub fn global_norm<P: ParamSet>(grads: &P) -> f64 {
    grads
        .tensors()
        .iter()
        .map(|(_, t)| t.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// Rescales `grads` in place so their joint L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm<P: ParamSet>(grads: &mut P, max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for t in grads.tensors_mut() {
            t.mapv_inplace(|v| v * scale);
        }
    }
    norm
}

/// `p ← p − lr(update_index) · g` for every tensor. Returns the rate used.
pub fn sgd_step<P: ParamSet>(
    params: &mut P,
    grads: &P,
    schedule: &SgdSchedule,
    update_index: u64,
) -> Result<f64> {
    let lr = schedule.lr(update_index);
    let gs = grads.tensors();
    let ps = params.tensors_mut();
    if gs.len() != ps.len() {
        return Err(Error::Shape(format!(
            "{} gradient tensors for {} parameters",
            gs.len(),
            ps.len()
        )));
    }
    for (p, (name, g)) in ps.into_iter().zip(gs) {
        if p.dim() != g.dim() {
            return Err(Error::Shape(format!(
                "gradient {name} is {:?}, parameter is {:?}",
                g.dim(),
                p.dim()
            )));
        }
        p.scaled_add(-lr, g);
    }
    Ok(lr)
}

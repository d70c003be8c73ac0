use super::ParamSet;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Tensor name and flat index of the worst entry.
    pub worst: (String, usize),
    pub checked: usize,
}

/// Compares `analytic` against central finite differences of `loss` at `params`.
///
/// Relative error per scalar is `|a − n| / max(|a|, |n|, 1e-6)`; the floor keeps
/// entries whose true gradient is zero from dividing round-off by round-off.
pub fn grad_check<P, F>(params: &P, analytic: &P, mut loss: F, epsilon: f64) -> Result<GradCheckReport>
where
    P: ParamSet + Clone,
    F: FnMut(&P) -> Result<f64>,
{
    let names: Vec<(String, usize)> = params
        .tensors()
        .iter()
        .map(|(n, t)| (n.clone(), t.len()))
        .collect();
    let grads: Vec<Vec<f64>> = analytic
        .tensors()
        .iter()
        .map(|(_, t)| t.iter().copied().collect())
        .collect();
    if grads.len() != names.len() || grads.iter().zip(&names).any(|(g, (_, n))| g.len() != *n) {
        return Err(Error::Shape("analytic gradient does not match parameters".into()));
    }

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (String::new(), 0),
        checked: 0,
    };
    for (k, (name, len)) in names.iter().enumerate() {
        for idx in 0..*len {
            let orig = nth(&mut probe, k, idx);
            set_nth(&mut probe, k, idx, orig + epsilon);
            let up = loss(&probe)?;
            set_nth(&mut probe, k, idx, orig - epsilon);
            let down = loss(&probe)?;
            set_nth(&mut probe, k, idx, orig);
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss while perturbing {name}[{idx}]"
                )));
            }
            let numeric = (up - down) / (2.0 * epsilon);
            let a = grads[k][idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = (name.clone(), idx);
            }
            report.checked += 1;
        }
    }
    Ok(report)
}

fn nth<P: ParamSet>(p: &mut P, k: usize, idx: usize) -> f64 {
    p.tensors_mut()[k].as_slice().expect("standard-layout tensor")[idx]
}

fn set_nth<P: ParamSet>(p: &mut P, k: usize, idx: usize, v: f64) {
    p.tensors_mut()[k].as_slice_mut().expect("standard-layout tensor")[idx] = v;
}

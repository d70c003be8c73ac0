use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;

use super::{sigmoid, uniform_tensor, Tensor2, INIT_RANGE};
use crate::{Error, Result};

/// Weights of one GRU cell.
///
/// Gate layout along the column axis is `[update | reset | candidate]`:
///
/// ```text
/// z  = σ(x·Wz + h·Uz + bz)
/// r  = σ(x·Wr + h·Ur + br)
/// n  = tanh(x·Wn + (r ⊙ h)·Un + bn)
/// h' = (1 − z) ⊙ n + z ⊙ h
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruCellParams {
    /// `[input_dim, 3·hidden]`
    pub w_x: Tensor2,
    /// `[hidden, 2·hidden]`, update and reset gates
    pub u_zr: Tensor2,
    /// `[hidden, hidden]`, candidate
    pub u_n: Tensor2,
    /// `[1, 3·hidden]`
    pub bias: Tensor2,
}

impl GruCellParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            w_x: Array2::zeros((input_dim, 3 * hidden_dim)),
            u_zr: Array2::zeros((hidden_dim, 2 * hidden_dim)),
            u_n: Array2::zeros((hidden_dim, hidden_dim)),
            bias: Array2::zeros((1, 3 * hidden_dim)),
        }
    }

    /// Weights from `uniform(-0.08, 0.08)`, biases zero.
    pub fn random<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        Self {
            w_x: uniform_tensor(input_dim, 3 * hidden_dim, INIT_RANGE, rng),
            u_zr: uniform_tensor(hidden_dim, 2 * hidden_dim, INIT_RANGE, rng),
            u_n: uniform_tensor(hidden_dim, hidden_dim, INIT_RANGE, rng),
            bias: Array2::zeros((1, 3 * hidden_dim)),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.u_n.nrows()
    }

    pub fn tensors(&self, prefix: &str) -> Vec<(String, &Tensor2)> {
        vec![
            (format!("{prefix}.w_x"), &self.w_x),
            (format!("{prefix}.u_zr"), &self.u_zr),
            (format!("{prefix}.u_n"), &self.u_n),
            (format!("{prefix}.bias"), &self.bias),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        vec![&mut self.w_x, &mut self.u_zr, &mut self.u_n, &mut self.bias]
    }
}

/// Forward values kept for the backward pass of one batched step.
#[derive(Debug, Clone)]
pub struct GruStepCache {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    z: Array2<f64>,
    r: Array2<f64>,
    n: Array2<f64>,
    rh: Array2<f64>,
}

/// One batched GRU step: `x` is `[batch, input_dim]`, `h_prev` is `[batch, hidden]`.
pub fn gru_forward(
    p: &GruCellParams,
    x: ArrayView2<f64>,
    h_prev: ArrayView2<f64>,
) -> Result<(Array2<f64>, GruStepCache)> {
    let hd = p.hidden_dim();
    if x.ncols() != p.input_dim() || h_prev.ncols() != hd || x.nrows() != h_prev.nrows() {
        return Err(Error::Shape(format!(
            "gru step expects x [B, {}] and h [B, {}], got x {:?} and h {:?}",
            p.input_dim(),
            hd,
            x.dim(),
            h_prev.dim()
        )));
    }
    let mut gx = x.dot(&p.w_x);
    gx += &p.bias;
    let gh = h_prev.dot(&p.u_zr);

    let mut z = &gx.slice(s![.., 0..hd]) + &gh.slice(s![.., 0..hd]);
    z.mapv_inplace(sigmoid);
    let mut r = &gx.slice(s![.., hd..2 * hd]) + &gh.slice(s![.., hd..2 * hd]);
    r.mapv_inplace(sigmoid);
    let rh = &r * &h_prev;
    let mut n = gx.slice(s![.., 2 * hd..]).to_owned();
    general_mat_mul(1.0, &rh, &p.u_n, 1.0, &mut n);
    n.mapv_inplace(f64::tanh);

    // h' = n + z ⊙ (h − n)
    let mut h = &h_prev - &n;
    h *= &z;
    h += &n;

    Ok((
        h,
        GruStepCache {
            x: x.to_owned(),
            h_prev: h_prev.to_owned(),
            z,
            r,
            n,
            rh,
        },
    ))
}

/// Backward pass of [`gru_forward`]. Accumulates parameter gradients into `grads`
/// and returns `(dx, dh_prev)`.
pub fn gru_backward(
    p: &GruCellParams,
    cache: &GruStepCache,
    dh: ArrayView2<f64>,
    grads: &mut GruCellParams,
) -> (Array2<f64>, Array2<f64>) {
    let hd = p.hidden_dim();
    let GruStepCache { x, h_prev, z, r, n, rh } = cache;
    let batch = x.nrows();

    let dn = &dh * &z.mapv(|v| 1.0 - v);
    let dz = &dh * &(h_prev - n);
    let mut dh_prev = &dh * z;

    let da_n = &dn * &n.mapv(|v| 1.0 - v * v);
    let da_z = &dz * &z.mapv(|v| v * (1.0 - v));
    let d_rh = da_n.dot(&p.u_n.t());
    let dr = &d_rh * h_prev;
    dh_prev += &(&d_rh * r);
    let da_r = &dr * &r.mapv(|v| v * (1.0 - v));

    let mut dgx = Array2::zeros((batch, 3 * hd));
    dgx.slice_mut(s![.., 0..hd]).assign(&da_z);
    dgx.slice_mut(s![.., hd..2 * hd]).assign(&da_r);
    dgx.slice_mut(s![.., 2 * hd..]).assign(&da_n);
    let dgh = dgx.slice(s![.., 0..2 * hd]);

    general_mat_mul(1.0, &x.t(), &dgx, 1.0, &mut grads.w_x);
    general_mat_mul(1.0, &h_prev.t(), &dgh, 1.0, &mut grads.u_zr);
    general_mat_mul(1.0, &rh.t(), &da_n, 1.0, &mut grads.u_n);
    grads.bias += &dgx.sum_axis(Axis(0)).insert_axis(Axis(0));

    let dx = dgx.dot(&p.w_x.t());
    general_mat_mul(1.0, &dgh, &p.u_zr.t(), 1.0, &mut dh_prev);
    (dx, dh_prev)
}

/// Single-vector convenience wrapper around [`gru_forward`].
pub fn gru_step(p: &GruCellParams, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
    let x = ArrayView2::from_shape((1, x.len()), x).expect("row view");
    let h = ArrayView2::from_shape((1, h_prev.len()), h_prev).expect("row view");
    let (out, _) = gru_forward(p, x, h)?;
    Ok(out.into_raw_vec_and_offset().0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frob(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        (a * b).sum()
    }

    #[test]
    fn zero_params_fixed_point() {
        let p = GruCellParams::zeros(3, 4);
        let out = gru_step(&p, &[0.3, -1.0, 2.0], &[0.0; 4]).unwrap();
        assert_eq!(out, vec![0.0; 4]);
    }

    #[test]
    fn output_bounded_from_zero_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = GruCellParams::random(5, 6, &mut rng);
        p.w_x.mapv_inplace(|v| v * 200.0);
        let x: Vec<f64> = (0..5).map(|i| i as f64 * 3.0 - 7.0).collect();
        // Saturated tanh may round to exactly ±1.
        for v in gru_step(&p, &x, &[0.0; 6]).unwrap() {
            assert!(v.abs() <= 1.0);
        }
        p.w_x.mapv_inplace(|v| v / 100.0);
        for v in gru_step(&p, &x, &[0.0; 6]).unwrap() {
            assert!(v > -1.0 && v < 1.0);
        }
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let p = GruCellParams::zeros(3, 4);
        assert!(matches!(gru_step(&p, &[0.0; 2], &[0.0; 4]), Err(Error::Shape(_))));
        assert!(matches!(gru_step(&p, &[0.0; 3], &[0.0; 5]), Err(Error::Shape(_))));
    }

    /// Loss = <C, h'> for a fixed random C; compare every analytic partial with central
    /// differences.
    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (b, i, h) = (3, 4, 5);
        let mut p = GruCellParams::random(i, h, &mut rng);
        p.w_x.mapv_inplace(|v| v * 10.0);
        p.u_zr.mapv_inplace(|v| v * 10.0);
        p.u_n.mapv_inplace(|v| v * 10.0);
        p.bias = uniform_tensor(1, 3 * h, 0.5, &mut rng);
        let x = uniform_tensor(b, i, 1.0, &mut rng);
        let h0 = uniform_tensor(b, h, 0.9, &mut rng);
        let c = uniform_tensor(b, h, 1.0, &mut rng);

        let loss = |p: &GruCellParams, x: &Array2<f64>, h0: &Array2<f64>| {
            let (out, _) = gru_forward(p, x.view(), h0.view()).unwrap();
            frob(&out, &c)
        };

        let (_, cache) = gru_forward(&p, x.view(), h0.view()).unwrap();
        let mut grads = GruCellParams::zeros(i, h);
        let (dx, dh0) = gru_backward(&p, &cache, c.view(), &mut grads);

        let eps = 1e-5;
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
        let mut worst = 0.0f64;

        for k in 0..4 {
            let len = p.tensors_mut()[k].len();
            for idx in 0..len {
                let mut pp = p.clone();
                pp.tensors_mut()[k].as_slice_mut().unwrap()[idx] += eps;
                let up = loss(&pp, &x, &h0);
                pp.tensors_mut()[k].as_slice_mut().unwrap()[idx] -= 2.0 * eps;
                let down = loss(&pp, &x, &h0);
                let num = (up - down) / (2.0 * eps);
                let ana = grads.tensors_mut()[k].as_slice().unwrap()[idx];
                worst = worst.max(rel(ana, num));
            }
        }
        for (input, analytic, is_x) in [(&x, &dx, true), (&h0, &dh0, false)] {
            for idx in 0..input.len() {
                let mut plus = input.clone();
                plus.as_slice_mut().unwrap()[idx] += eps;
                let mut minus = input.clone();
                minus.as_slice_mut().unwrap()[idx] -= eps;
                let num = if is_x {
                    (loss(&p, &plus, &h0) - loss(&p, &minus, &h0)) / (2.0 * eps)
                } else {
                    (loss(&p, &x, &plus) - loss(&p, &x, &minus)) / (2.0 * eps)
                };
                worst = worst.max(rel(analytic.as_slice().unwrap()[idx], num));
            }
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }
}

use super::gmm::{nll, nll_with_head_grad, GmmParams};
use super::PolicyParams;
use ndarray::{Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};

use crate::{Error, Result};

/// One weighted training example. `action` is in normalised action space.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub window: Vec<f64>,
    pub action: [f64; 3],
    pub weight: f64,
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Single-window forward pass returning the raw head outputs.
fn run(params: &PolicyParams, x: &[f64]) -> Vec<f64> {
    let cfg = &params.config;
    let (h, o) = (cfg.hidden, cfg.output_dim());
    let off = params.offsets();
    let v = &params.values;

    let mut h1 = v[off.b1..off.b1 + h].to_vec();
    for (i, &xi) in x.iter().enumerate() {
        if xi != 0.0 {
            axpy(xi, &v[off.w1 + i * h..off.w1 + (i + 1) * h], &mut h1);
        }
    }
    h1.iter_mut().for_each(|a| *a = a.max(0.0));

    let mut h2 = v[off.b2..off.b2 + h].to_vec();
    for (j, &a) in h1.iter().enumerate() {
        if a != 0.0 {
            axpy(a, &v[off.w2 + j * h..off.w2 + (j + 1) * h], &mut h2);
        }
    }
    h2.iter_mut().for_each(|a| *a = a.max(0.0));

    let mut head = v[off.b3..off.b3 + o].to_vec();
    for (j, &a) in h2.iter().enumerate() {
        if a != 0.0 {
            axpy(a, &v[off.w3 + j * o..off.w3 + (j + 1) * o], &mut head);
        }
    }
    head
}

fn check_window(params: &PolicyParams, window: &[f64]) -> Result<()> {
    if window.len() != params.config.input_dim() {
        return Err(Error::Input(format!(
            "window length {} != policy input {}",
            window.len(),
            params.config.input_dim()
        )));
    }
    if window.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("non-finite policy input".into()));
    }
    Ok(())
}

pub fn forward(params: &PolicyParams, window: &[f64]) -> Result<GmmParams> {
    check_window(params, window)?;
    let head = run(params, window);
    Ok(GmmParams::from_head(&head, params.config.modes, params.config.sigma_min))
}

fn total_weight(batch: &[Sample]) -> Result<f64> {
    if batch.iter().any(|s| !(s.weight >= 0.0) || !s.weight.is_finite()) {
        return Err(Error::Input("sample weights must be finite and non-negative".into()));
    }
    let total: f64 = batch.iter().map(|s| s.weight).sum();
    if total <= 0.0 {
        return Err(Error::Input("sample weights sum to zero".into()));
    }
    Ok(total)
}

/// Batched activations for the non-zero-weight samples of a batch.
struct BatchTrace {
    x: Array2<f64>,
    h1: Array2<f64>,
    h2: Array2<f64>,
    head: Array2<f64>,
    coef: Vec<f64>,
}

fn run_batch(params: &PolicyParams, batch: &[Sample]) -> Result<BatchTrace> {
    let total = total_weight(batch)?;
    let cfg = &params.config;
    let (n_in, h, o) = (cfg.input_dim(), cfg.hidden, cfg.output_dim());
    let off = params.offsets();
    let v = &params.values;

    let live: Vec<&Sample> = batch.iter().filter(|s| s.weight != 0.0).collect();
    let mut x = Array2::zeros((live.len(), n_in));
    for (mut row, s) in x.rows_mut().into_iter().zip(&live) {
        check_window(params, &s.window)?;
        row.assign(&ArrayView1::from(&s.window[..]));
    }
    let coef = live.iter().map(|s| s.weight / total).collect();

    let layer = |input: &Array2<f64>, w: usize, b: usize, rows: usize, cols: usize, relu: bool| {
        let wv = ArrayView2::from_shape((rows, cols), &v[w..w + rows * cols]).expect("layer shape");
        let bv = ArrayView1::from(&v[b..b + cols]);
        let mut out = input.dot(&wv);
        out += &bv;
        if relu {
            out.mapv_inplace(|a| a.max(0.0));
        }
        out
    };
    let h1 = layer(&x, off.w1, off.b1, n_in, h, true);
    let h2 = layer(&h1, off.w2, off.b2, h, h, true);
    let head = layer(&h2, off.w3, off.b3, h, o, false);
    Ok(BatchTrace { x, h1, h2, head, coef })
}

/// `sum_i w_i * nll_i / sum_i w_i`.
pub fn batch_loss(params: &PolicyParams, batch: &[Sample]) -> Result<f64> {
    let t = run_batch(params, batch)?;
    let cfg = &params.config;
    let live = batch.iter().filter(|s| s.weight != 0.0);
    let mut loss = 0.0;
    for ((row, s), c) in t.head.rows().into_iter().zip(live).zip(&t.coef) {
        let gmm = GmmParams::from_head(row.as_slice().expect("contiguous"), cfg.modes, cfg.sigma_min);
        loss += c * nll(&gmm, s.action);
    }
    Ok(loss)
}

/// Exact gradient of [`batch_loss`]; returns `(loss, gradient)` with the
/// gradient laid out like `params.values`.
pub fn backward(params: &PolicyParams, batch: &[Sample]) -> Result<(f64, Vec<f64>)> {
    let t = run_batch(params, batch)?;
    let cfg = &params.config;
    let (n_in, h, o, k) = (cfg.input_dim(), cfg.hidden, cfg.output_dim(), cfg.modes);
    let off = params.offsets();
    let v = &params.values;
    let mut grad = vec![0.0; v.len()];

    let live = batch.iter().filter(|s| s.weight != 0.0);
    let mut dhead = Array2::zeros(t.head.raw_dim());
    let mut loss = 0.0;
    for (((row, mut drow), s), c) in t.head.rows().into_iter().zip(dhead.rows_mut()).zip(live).zip(&t.coef) {
        let d = drow.as_slice_mut().expect("contiguous");
        loss += c * nll_with_head_grad(row.as_slice().expect("contiguous"), k, cfg.sigma_min, s.action, d);
        d.iter_mut().for_each(|g| *g *= c);
    }

    let w2 = ArrayView2::from_shape((h, h), &v[off.w2..off.w2 + h * h]).expect("w2 shape");
    let w3 = ArrayView2::from_shape((h, o), &v[off.w3..off.w3 + h * o]).expect("w3 shape");

    let mut dh2 = dhead.dot(&w3.t());
    dh2.zip_mut_with(&t.h2, |g, &a| {
        if a <= 0.0 {
            *g = 0.0
        }
    });
    let mut dh1 = dh2.dot(&w2.t());
    dh1.zip_mut_with(&t.h1, |g, &a| {
        if a <= 0.0 {
            *g = 0.0
        }
    });

    let mut put = |w: usize, b: usize, input: &Array2<f64>, delta: &Array2<f64>, rows: usize, cols: usize| {
        let mut gw = ArrayViewMut2::from_shape((rows, cols), &mut grad[w..w + rows * cols]).expect("grad shape");
        gw.assign(&input.t().dot(delta));
        let mut gb = ArrayViewMut1::from(&mut grad[b..b + cols]);
        gb.assign(&delta.sum_axis(Axis(0)));
    };
    put(off.w3, off.b3, &t.h2, &dhead, h, o);
    put(off.w2, off.b2, &t.h1, &dh2, h, h);
    put(off.w1, off.b1, &t.x, &dh1, n_in, h);
    Ok((loss, grad))
}

use serde::{Deserialize, Serialize};

use super::PolicyParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub eps: f64,
}

impl Default for AdamW {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: 0.9, beta2: 0.999, weight_decay: 1e-4, eps: 1e-8 }
    }
}

impl AdamW {
    pub fn validate(&self) -> Result<()> {
        let betas_ok = (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2);
        if !(self.lr > 0.0) || !betas_ok || !(self.weight_decay >= 0.0) || !(self.eps > 0.0) {
            return Err(Error::Config(format!("invalid AdamW settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], step: 0 }
    }
}

pub fn global_norm(grads: &[f64]) -> f64 {
    grads.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Rescale in place so the global L2 norm does not exceed `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// Decoupled weight decay followed by a bias-corrected Adam step.
pub fn adamw_step(params: &mut PolicyParams, grads: &[f64], state: &mut OptimizerState, opt: &AdamW) {
    adamw_step_masked(&mut params.values, grads, state, opt, None)
}

/// Like [`adamw_step`] but entries with `mask[i] == false` are left untouched,
/// including their moments and weight decay.
pub fn adamw_step_masked(
    values: &mut [f64],
    grads: &[f64],
    state: &mut OptimizerState,
    opt: &AdamW,
    mask: Option<&[bool]>,
) {
    debug_assert_eq!(values.len(), grads.len());
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - opt.beta1.powi(t);
    let bc2 = 1.0 - opt.beta2.powi(t);
    for i in 0..values.len() {
        if let Some(m) = mask {
            if !m[i] {
                continue;
            }
        }
        let g = grads[i];
        values[i] -= opt.lr * opt.weight_decay * values[i];
        state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * g;
        state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        values[i] -= opt.lr * m_hat / (v_hat.sqrt() + opt.eps);
    }
}

//! Windowed visuomotor policy with a Gaussian-mixture action head.
//!
//! Input is a flattened window of `window` frames, each frame being
//! `[vision embedding, language embedding, proprio]`. Frames before the
//! episode start repeat frame 0. Two ReLU hidden layers feed a head that
//! emits, per mode, a logit, a 3D mean and three pre-softplus scales.
//!
//! The mixture lives in a normalised action space: raw actions are divided
//! by [`ACTION_SCALE`] before they are scored and multiplied back after
//! sampling.

mod checkpoint;
mod controller;
mod gmm;
mod network;
mod optim;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, read_params, save_checkpoint, write_params, MAGIC};
pub use controller::PolicyController;
pub use gmm::{nll, sample_action, GmmParams};
pub use network::{backward, batch_loss, forward, Sample};
pub use optim::{adamw_step, adamw_step_masked, clip_grad_norm, global_norm, AdamW, OptimizerState};

use crate::taskworld::{Demonstration, DELTA_MAX};
use crate::{Error, Result};

pub const ACTION_SCALE: [f64; 3] = [DELTA_MAX, DELTA_MAX, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    pub window: usize,
    pub hidden: usize,
    pub modes: usize,
    pub sigma_min: f64,
    pub vision_dim: usize,
    pub language_dim: usize,
    pub init_seed: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { window: 10, hidden: 64, modes: 5, sigma_min: 1e-3, vision_dim: 32, language_dim: 32, init_seed: 0 }
    }
}

impl PolicyConfig {
    pub fn frame_dim(&self) -> usize {
        self.vision_dim + self.language_dim + 3
    }

    pub fn input_dim(&self) -> usize {
        self.window * self.frame_dim()
    }

    pub fn output_dim(&self) -> usize {
        7 * self.modes
    }

    /// `(rows, cols)` of each tensor in storage order: w1, b1, w2, b2, w3, b3.
    pub fn shapes(&self) -> [(usize, usize); 6] {
        let (i, h, o) = (self.input_dim(), self.hidden, self.output_dim());
        [(i, h), (1, h), (h, h), (1, h), (h, o), (1, o)]
    }

    pub fn n_params(&self) -> usize {
        self.shapes().iter().map(|(r, c)| r * c).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.hidden == 0 || self.modes == 0 {
            return Err(Error::Config("policy window, hidden and modes must be positive".into()));
        }
        if !(self.sigma_min > 0.0) {
            return Err(Error::Config("sigma_min must be positive".into()));
        }
        Ok(())
    }
}

/// All trainable parameters, stored flat in tensor order.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub config: PolicyConfig,
    pub values: Vec<f64>,
}

pub(crate) struct Offsets {
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
    pub w3: usize,
    pub b3: usize,
}

impl PolicyParams {
    pub fn zeros(config: PolicyConfig) -> Self {
        Self { values: vec![0.0; config.n_params()], config }
    }

    /// He-uniform hidden layers, a small head, zero biases.
    pub fn init(config: PolicyConfig) -> Self {
        let mut rng = crate::seed::rng(config.init_seed, &[crate::seed::tag::INIT, 0xB0]);
        let mut p = Self::zeros(config);
        let shapes = config.shapes();
        let mut at = 0;
        for (k, &(r, c)) in shapes.iter().enumerate() {
            let n = r * c;
            if k % 2 == 0 {
                let bound = if k == 4 { 0.1 } else { 1.0 } * (6.0 / r as f64).sqrt();
                for v in &mut p.values[at..at + n] {
                    *v = rng.random_range(-bound..bound);
                }
            }
            at += n;
        }
        p
    }

    pub(crate) fn offsets(&self) -> Offsets {
        let s = self.config.shapes();
        let mut acc = 0;
        let mut next = |k: usize| {
            let o = acc;
            acc += s[k].0 * s[k].1;
            o
        };
        Offsets { w1: next(0), b1: next(1), w2: next(2), b2: next(3), w3: next(4), b3: next(5) }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Flattened input window ending at frame `t`.
pub fn build_window(
    config: &PolicyConfig,
    vision: &[Vec<f64>],
    lang: &[f64],
    proprio: &[[f64; 3]],
    t: usize,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(config.input_dim());
    let h = config.window;
    for k in 0..h {
        // Oldest first; indices before the start clamp to frame 0.
        let idx = (t + k + 1).saturating_sub(h);
        out.extend_from_slice(&vision[idx]);
        out.extend_from_slice(lang);
        out.extend_from_slice(&proprio[idx]);
    }
    out
}

pub fn normalize_action(a: [f64; 3]) -> [f64; 3] {
    [a[0] / ACTION_SCALE[0], a[1] / ACTION_SCALE[1], a[2] / ACTION_SCALE[2]]
}

pub fn denormalize_action(a: [f64; 3]) -> [f64; 3] {
    [a[0] * ACTION_SCALE[0], a[1] * ACTION_SCALE[1], a[2] * ACTION_SCALE[2]]
}

/// Training sample for frame `t` of a demonstration.
pub fn demo_sample(config: &PolicyConfig, demo: &Demonstration, t: usize, weight: f64) -> Sample {
    let proprio: Vec<[f64; 3]> = demo.frames[..=t].iter().map(|f| f.proprio).collect();
    Sample {
        window: build_window(config, &demo.vision_embeds, &demo.lang_embed, &proprio, t),
        action: normalize_action(demo.frames[t].action),
        weight,
    }
}

pub fn demo_samples(config: &PolicyConfig, demo: &Demonstration) -> Vec<Sample> {
    let proprio: Vec<[f64; 3]> = demo.frames.iter().map(|f| f.proprio).collect();
    (0..demo.len())
        .map(|t| Sample {
            window: build_window(config, &demo.vision_embeds, &demo.lang_embed, &proprio, t),
            action: normalize_action(demo.frames[t].action),
            weight: 1.0,
        })
        .collect()
}

/// Sampled raw action for the given input window.
pub fn act(params: &PolicyParams, window: &[f64], rng: &mut ChaCha8Rng) -> Result<[f64; 3]> {
    let gmm = forward(params, window)?;
    Ok(denormalize_action(sample_action(&gmm, rng)))
}

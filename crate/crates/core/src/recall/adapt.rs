use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::weights::WeightVector;
use crate::encoders::Encoders;
use crate::lifelong::rollout_episodes;
use crate::lifelong::EpisodeStream;
use crate::policy::{
    adamw_step, backward, clip_grad_norm, demo_samples, AdamW, OptimizerState, PolicyController, PolicyParams, Sample,
};
use crate::rollout::RolloutRecord;
use crate::taskworld::{Demonstration, TaskSpec};
use crate::{Error, Result};

pub const DEFAULT_QUIZ_EPISODES: usize = 10;
pub const DEFAULT_ADAPT_EPOCHS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamW,
    pub grad_clip: f64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self { epochs: DEFAULT_ADAPT_EPOCHS, batch_size: 32, optimizer: AdamW::default(), grad_clip: 100.0 }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("adaptation batch size must be positive".into()));
        }
        if !(self.grad_clip > 0.0) {
            return Err(Error::Config("adaptation gradient clip must be positive".into()));
        }
        self.optimizer.validate()
    }
}

/// Retrieved demonstrations paired with their per-frame weights.
#[derive(Debug, Clone)]
pub struct AdaptationBatchSet<'a> {
    demos: Vec<&'a Demonstration>,
    weights: Vec<WeightVector>,
}

impl<'a> AdaptationBatchSet<'a> {
    pub fn new(demos: Vec<&'a Demonstration>, weights: Vec<WeightVector>) -> Result<Self> {
        if demos.is_empty() {
            return Err(Error::Input("adaptation needs at least one demonstration".into()));
        }
        if demos.len() != weights.len() {
            return Err(Error::Input("one weight vector per demonstration required".into()));
        }
        for (d, w) in demos.iter().zip(&weights) {
            if d.len() != w.len() {
                return Err(Error::Input(format!(
                    "weight vector of length {} for a demonstration of {} frames",
                    w.len(),
                    d.len()
                )));
            }
        }
        Ok(Self { demos, weights })
    }

    /// Same demonstrations, all weights one.
    pub fn uniform(demos: Vec<&'a Demonstration>) -> Result<Self> {
        let weights = demos.iter().map(|d| WeightVector::uniform(d.len())).collect();
        Self::new(demos, weights)
    }

    pub fn count(&self) -> usize {
        self.demos.len()
    }

    pub fn weights(&self) -> &[WeightVector] {
        &self.weights
    }

    pub fn samples(&self, params: &PolicyParams) -> Vec<Sample> {
        self.demos
            .iter()
            .zip(&self.weights)
            .flat_map(|(d, w)| {
                demo_samples(&params.config, d).into_iter().zip(&w.weights).map(|(mut s, &wt)| {
                    s.weight = wt;
                    s
                })
            })
            .collect()
    }
}

/// Policy rollouts on `task` before any adaptation.
pub fn quiz(
    params: &PolicyParams,
    task: &TaskSpec,
    episodes: usize,
    encoders: &Encoders,
    seed: u64,
) -> Result<Vec<RolloutRecord>> {
    let mut c = PolicyController::new(params);
    rollout_episodes(task, &mut c, encoders, episodes, seed, EpisodeStream::Quiz)
}

/// Fine-tune a copy of `params` on the weighted retrieved frames with a fresh
/// optimiser. The input parameters are left alone.
pub fn local_adapt(
    params: &PolicyParams,
    set: &AdaptationBatchSet<'_>,
    cfg: &AdaptConfig,
    rng: &mut ChaCha8Rng,
) -> Result<PolicyParams> {
    cfg.validate()?;
    let mut out = params.clone();
    if cfg.epochs == 0 {
        return Ok(out);
    }
    let samples = set.samples(params);
    let mut opt = OptimizerState::new(out.len());
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Sample> = chunk.iter().map(|&i| samples[i].clone()).collect();
            let (_, mut grad) = backward(&out, &batch)?;
            clip_grad_norm(&mut grad, cfg.grad_clip);
            adamw_step(&mut out, &grad, &mut opt, &cfg.optimizer);
        }
    }
    Ok(out)
}

use rand_distr::{Distribution, StandardNormal};

use crate::seed::{self, tag};
use crate::{Error, Result};

/// Seeded random projection followed by `tanh`.
#[derive(Debug, Clone, PartialEq)]
pub struct VisionEncoder {
    /// Row-major `dim x obs_len`.
    projection: Vec<f64>,
    dim: usize,
    obs_len: usize,
}

impl VisionEncoder {
    pub fn new(seed: u64, dim: usize, obs_len: usize) -> Self {
        let mut rng = seed::rng(seed, &[tag::ENCODER, 0, dim as u64, obs_len as u64]);
        let scale = 1.0 / (obs_len as f64).sqrt();
        let projection = (0..dim * obs_len)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
            .collect();
        Self { projection, dim, obs_len }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn obs_len(&self) -> usize {
        self.obs_len
    }

    pub fn encode(&self, obs: &[f64]) -> Result<Vec<f64>> {
        if obs.len() != self.obs_len {
            return Err(Error::Input(format!(
                "observation length {} does not match encoder width {}",
                obs.len(),
                self.obs_len
            )));
        }
        Ok(self
            .projection
            .chunks_exact(self.obs_len)
            .map(|row| row.iter().zip(obs).map(|(p, o)| p * o).sum::<f64>().tanh())
            .collect())
    }
}

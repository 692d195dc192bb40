use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-parameter task ownership. `0` marks a free parameter, `k >= 1` a
/// parameter owned (and frozen) by the k-th committed task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacknetMasks {
    pub owner: Vec<u16>,
    pub committed: u16,
}

impl PacknetMasks {
    pub fn new(n: usize) -> Self {
        Self { owner: vec![0; n], committed: 0 }
    }

    pub fn free_count(&self) -> usize {
        self.owner.iter().filter(|&&o| o == 0).count()
    }

    pub fn free_mask(&self) -> Vec<bool> {
        self.owner.iter().map(|&o| o == 0).collect()
    }

    pub fn owned_by(&self, task: u16) -> Vec<bool> {
        self.owner.iter().map(|&o| o == task).collect()
    }

    /// Minimum free parameters a new task requires.
    pub fn required(&self, min_free_frac: f64) -> usize {
        ((min_free_frac * self.owner.len() as f64).ceil() as usize).max(1)
    }

    pub fn check_capacity(&self, min_free_frac: f64) -> Result<()> {
        let free = self.free_count();
        let required = self.required(min_free_frac);
        if free < required {
            return Err(Error::CapacityExhausted { free, required });
        }
        Ok(())
    }

    /// Keep the largest-magnitude `1 - prune_frac` of the free parameters for
    /// a new task; the rest are zeroed and stay free. Returns the new task's
    /// label.
    pub fn commit(&mut self, values: &mut [f64], prune_frac: f64) -> Result<u16> {
        let mut free: Vec<usize> = (0..values.len()).filter(|&i| self.owner[i] == 0).collect();
        if free.is_empty() {
            return Err(Error::CapacityExhausted { free: 0, required: 1 });
        }
        free.sort_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs()).then(a.cmp(&b)));
        let n_prune = ((prune_frac * free.len() as f64) + 1e-9).floor() as usize;
        let n_prune = n_prune.min(free.len());
        self.committed += 1;
        let label = self.committed;
        for &i in &free[..n_prune] {
            values[i] = 0.0;
        }
        for &i in &free[n_prune..] {
            self.owner[i] = label;
        }
        Ok(label)
    }

    /// Parameters visible to task `task` (1-based committed label): owned by
    /// tasks `<= task`, everything else zeroed.
    pub fn masked_values(&self, values: &[f64], task: u16) -> Vec<f64> {
        values.iter().zip(&self.owner).map(|(&v, &o)| if o != 0 && o <= task { v } else { 0.0 }).collect()
    }
}

//! Episodic memory: a bounded demonstration store used for replay during
//! training and for retrieval at deployment.

mod io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub use io::{load, save, MEMORY_FORMAT, MEMORY_VERSION};

use crate::policy::{demo_sample, PolicyConfig, Sample};
use crate::taskworld::Demonstration;
use crate::{Error, Result};

pub const DEFAULT_DEMOS_PER_TASK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Admission {
    /// Keep the first `per_task` demonstrations of each ground-truth task.
    /// Consumes the harness-held task id.
    OracleQuota { per_task: usize },
    /// Classic reservoir sampling over the whole stream.
    Reservoir { capacity: usize },
}

impl Default for Admission {
    fn default() -> Self {
        Admission::OracleQuota { per_task: DEFAULT_DEMOS_PER_TASK }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodicMemory {
    admission: Admission,
    demos: Vec<Demonstration>,
    per_task: BTreeMap<usize, usize>,
    seen: u64,
    rng: ChaCha8Rng,
}

impl EpisodicMemory {
    pub fn new(admission: Admission, seed: u64) -> Self {
        Self {
            admission,
            demos: Vec::new(),
            per_task: BTreeMap::new(),
            seen: 0,
            rng: ChaCha8Rng::seed_from_u64(crate::seed::derive(seed, &[crate::seed::tag::MEMORY])),
        }
    }

    pub fn admission(&self) -> Admission {
        self.admission
    }

    pub fn demos(&self) -> &[Demonstration] {
        &self.demos
    }

    pub fn len(&self) -> usize {
        self.demos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demos.is_empty()
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn total_frames(&self) -> usize {
        self.demos.iter().map(Demonstration::len).sum()
    }

    /// Offer one demonstration. Returns whether it was stored.
    pub fn admit(&mut self, demo: Demonstration) -> bool {
        self.seen += 1;
        match self.admission {
            Admission::OracleQuota { per_task } => {
                let count = self.per_task.entry(demo.eval_task_id).or_insert(0);
                if *count < per_task {
                    *count += 1;
                    self.demos.push(demo);
                    true
                } else {
                    false
                }
            }
            Admission::Reservoir { capacity } => {
                if self.demos.len() < capacity {
                    *self.per_task.entry(demo.eval_task_id).or_insert(0) += 1;
                    self.demos.push(demo);
                    return true;
                }
                let j = self.rng.random_range(0..self.seen);
                if (j as usize) < capacity {
                    let old = std::mem::replace(&mut self.demos[j as usize], demo);
                    if let Some(c) = self.per_task.get_mut(&old.eval_task_id) {
                        *c -= 1;
                    }
                    let id = self.demos[j as usize].eval_task_id;
                    *self.per_task.entry(id).or_insert(0) += 1;
                    true
                } else {
                    false
                }
            }
        }
    }

    /// Locate the `(demo, frame)` of a global frame index.
    fn locate(&self, mut idx: usize) -> (usize, usize) {
        for (d, demo) in self.demos.iter().enumerate() {
            if idx < demo.len() {
                return (d, idx);
            }
            idx -= demo.len();
        }
        unreachable!("frame index out of range")
    }

    /// `(demo index, frame index)` pairs drawn uniformly over stored frames.
    pub fn replay_indices(&self, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
        if self.is_empty() {
            return Err(Error::EmptyMemory);
        }
        let total = self.total_frames();
        Ok((0..k).map(|_| self.locate(rng.random_range(0..total))).collect())
    }

    /// `k` unit-weight training samples drawn uniformly over stored frames.
    pub fn replay_batch(&self, config: &PolicyConfig, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
        Ok(self.replay_indices(k, rng)?.into_iter().map(|(d, t)| demo_sample(config, &self.demos[d], t, 1.0)).collect())
    }

    pub(crate) fn parts(&self) -> (&BTreeMap<usize, usize>, &ChaCha8Rng) {
        (&self.per_task, &self.rng)
    }

    pub(crate) fn from_parts(
        admission: Admission,
        demos: Vec<Demonstration>,
        per_task: BTreeMap<usize, usize>,
        seen: u64,
        rng: ChaCha8Rng,
    ) -> Self {
        Self { admission, demos, per_task, seen, rng }
    }
}

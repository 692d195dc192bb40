use rand::Rng;

use crate::encoders::Encoders;
use crate::policy::{PolicyController, PolicyParams};
use crate::rollout::{run_episode, Controller, RolloutRecord};
use crate::seed::{self, tag};
use crate::taskworld::TaskSpec;
use crate::Result;

/// Independent deterministic episode streams. Final testing reuses the
/// evaluation stream so adapted and unadapted policies face the same starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeStream {
    Eval,
    Probe,
    Quiz,
}

impl EpisodeStream {
    fn tag(self) -> u64 {
        match self {
            EpisodeStream::Eval => tag::EVAL,
            EpisodeStream::Probe => tag::PROBE,
            EpisodeStream::Quiz => tag::QUIZ,
        }
    }
}

/// Roll out `episodes` episodes, each with a goal description drawn from the
/// task's paraphrase pool.
pub fn rollout_episodes(
    task: &TaskSpec,
    controller: &mut dyn Controller,
    encoders: &Encoders,
    episodes: usize,
    seed: u64,
    stream: EpisodeStream,
) -> Result<Vec<RolloutRecord>> {
    (0..episodes)
        .map(|e| {
            let ep_seed = seed::derive(seed, &[stream.tag(), task.eval_task_id as u64, e as u64]);
            let mut rng = seed::rng(ep_seed, &[tag::EVAL]);
            let description = &task.descriptions[rng.random_range(0..task.descriptions.len())];
            run_episode(task, controller, encoders, description, ep_seed, &mut rng)
        })
        .collect()
}

/// Fraction of successful episodes.
pub fn success_rate(
    task: &TaskSpec,
    controller: &mut dyn Controller,
    encoders: &Encoders,
    episodes: usize,
    seed: u64,
    stream: EpisodeStream,
) -> Result<f64> {
    if episodes == 0 {
        return Ok(0.0);
    }
    let recs = rollout_episodes(task, controller, encoders, episodes, seed, stream)?;
    Ok(recs.iter().filter(|r| r.success).count() as f64 / episodes as f64)
}

/// Per-task success rates of the policy over the evaluation stream.
pub fn evaluate(
    params: &PolicyParams,
    tasks: &[TaskSpec],
    episodes: usize,
    encoders: &Encoders,
    seed: u64,
) -> Result<Vec<f64>> {
    tasks
        .iter()
        .map(|t| {
            let mut c = PolicyController::new(params);
            success_rate(t, &mut c, encoders, episodes, seed, EpisodeStream::Eval)
        })
        .collect()
}

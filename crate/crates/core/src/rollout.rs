//! Closed-loop episode execution shared by data collection, evaluation and
//! the quiz phase.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoders::Encoders;
use crate::taskworld::{self, Frame, TaskSpec, WorldState, MAX_EPISODE_LEN};
use crate::Result;

pub struct Observation<'a> {
    pub state: &'a WorldState,
    pub obs: &'a [f64],
    pub proprio: [f64; 3],
    pub vision: &'a [f64],
    pub t: usize,
}

/// Anything that can drive the arm for one episode.
pub trait Controller {
    fn reset(&mut self, description: &[String], lang_embed: &[f64]);
    fn act(&mut self, obs: &Observation<'_>, rng: &mut ChaCha8Rng) -> Result<[f64; 3]>;
}

/// One executed episode with per-frame vision embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutRecord {
    pub frames: Vec<Frame>,
    pub vision_embeds: Vec<Vec<f64>>,
    pub lang_embed: Vec<f64>,
    pub description: Vec<String>,
    pub success: bool,
    pub episode_seed: u64,
    /// Harness-only bookkeeping.
    pub eval_task_id: usize,
}

/// Run until success or `MAX_EPISODE_LEN` steps.
pub fn run_episode(
    task: &TaskSpec,
    controller: &mut dyn Controller,
    encoders: &Encoders,
    description: &[String],
    episode_seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<RolloutRecord> {
    let lang_embed = encoders.language.encode(description)?;
    controller.reset(description, &lang_embed);
    let mut state = taskworld::initial_state(task, episode_seed);
    let mut frames = Vec::new();
    let mut vision_embeds = Vec::new();
    let mut done = taskworld::success(&state, task);
    while !done && frames.len() < MAX_EPISODE_LEN {
        let obs = taskworld::observe(&state);
        let vision = encoders.vision.encode(&obs)?;
        let proprio = taskworld::proprio(&state);
        let action = controller
            .act(&Observation { state: &state, obs: &obs, proprio, vision: &vision, t: frames.len() }, rng)?;
        state = taskworld::step(&state, action)?;
        frames.push(Frame { obs, proprio, action });
        vision_embeds.push(vision);
        done = taskworld::success(&state, task);
    }
    Ok(RolloutRecord {
        frames,
        vision_embeds,
        lang_embed,
        description: description.to_vec(),
        success: done,
        episode_seed,
        eval_task_id: task.eval_task_id,
    })
}

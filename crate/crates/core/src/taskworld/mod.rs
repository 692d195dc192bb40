//! Deterministic 2D pick-and-place world: dynamics, task suites, the
//! scripted expert and the template paraphraser.

mod expert;
pub mod io;
pub mod paraphrase;
mod suite;
mod world;

use serde::{Deserialize, Serialize};

pub use expert::{expert_rollout, ExpertController};
pub use paraphrase::{content_words, is_function_word, paraphrase};
pub use suite::{initial_state, make_suite, make_suite_with, SceneLayout};
pub use world::{observe, proprio, step, success};

/// Maximum per-step displacement along each axis.
pub const DELTA_MAX: f64 = 0.05;
/// Closing the gripper within this distance of an object grasps it.
pub const GRASP_EPS: f64 = 0.04;
pub const ZONE_RADIUS: f64 = 0.08;
pub const MAX_EPISODE_LEN: usize = 150;
/// Uniform jitter half-width applied to initial object and agent positions.
pub const INIT_JITTER: f64 = 0.1;
pub const DEFAULT_PARAPHRASES: usize = 10;

pub const COLORS: [&str; 24] = [
    "red", "blue", "green", "yellow", "purple", "orange", "black", "white", "pink", "brown", "gray", "cyan", "magenta",
    "teal", "olive", "maroon", "navy", "beige", "gold", "silver", "violet", "indigo", "coral", "lime",
];

pub const ZONE_NAMES: [&str; 24] = [
    "basket", "plate", "tray", "bin", "box", "mat", "shelf", "drawer", "bowl", "pan", "rack", "crate", "tub", "tile",
    "pad", "dish", "board", "stand", "cart", "stool", "desk", "sink", "ledge", "cabinet",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Spatial,
    Object,
    Goal,
    Mixed,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Spatial => "spatial",
            Family::Object => "object",
            Family::Goal => "goal",
            Family::Mixed => "mixed",
        }
    }

    /// Retrieval distance weights `(alpha_v, alpha_l)` used for this family.
    pub fn default_alphas(self) -> (f64, f64) {
        match self {
            Family::Spatial | Family::Object => (1.0, 0.5),
            Family::Goal => (0.5, 1.0),
            Family::Mixed => (1.0, 0.1),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "spatial" => Ok(Family::Spatial),
            "object" => Ok(Family::Object),
            "goal" => Ok(Family::Goal),
            "mixed" => Ok(Family::Mixed),
            other => Err(crate::Error::Config(format!("unknown task family `{other}`"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Object {
    pub pos: [f64; 2],
    pub color: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub pos: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub agent_pos: [f64; 2],
    /// `true` when the gripper is closed.
    pub gripper: bool,
    pub held: Option<usize>,
    pub objects: Vec<Object>,
    pub zones: Vec<Zone>,
}

/// One manipulation goal. `eval_task_id` is consumed by the harness only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub family: Family,
    pub target_object: usize,
    pub target_zone: usize,
    pub layout_seed: u64,
    pub n_objects: usize,
    pub n_zones: usize,
    /// Zone layout is drawn from this seed; shared across tasks when a family
    /// holds zones fixed.
    pub zone_seed: u64,
    pub descriptions: Vec<Vec<String>>,
    pub eval_task_id: usize,
}

impl TaskSpec {
    pub fn layout(&self) -> SceneLayout {
        SceneLayout::generate(self.n_objects, self.n_zones, self.layout_seed, self.zone_seed)
    }

    pub fn obs_len(&self) -> usize {
        world::obs_len(self.n_objects, self.n_zones)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub obs: Vec<f64>,
    pub proprio: [f64; 3],
    pub action: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub frames: Vec<Frame>,
    pub vision_embeds: Vec<Vec<f64>>,
    pub lang_embed: Vec<f64>,
    pub description: Vec<String>,
    /// Ground-truth task id; never read by the learner.
    pub eval_task_id: usize,
}

impl Demonstration {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Convenience for tests and examples: whitespace tokenisation.
pub fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

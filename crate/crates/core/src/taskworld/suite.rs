use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    paraphrase, Family, Object, TaskSpec, WorldState, Zone, COLORS, DEFAULT_PARAPHRASES, GRASP_EPS, INIT_JITTER,
    ZONE_NAMES, ZONE_RADIUS,
};
use crate::seed::{self, tag};
use crate::{Error, Result};

const AGENT_HOME: [f64; 2] = [0.5, 0.08];
const ZONE_SEP: f64 = 0.3;
const OBJECT_SEP: f64 = 0.15;
/// Base object positions keep this clearance from zone rims so jitter cannot
/// start an episode already solved.
const ZONE_CLEARANCE: f64 = INIT_JITTER + 0.05;

/// Base (un-jittered) scene for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneLayout {
    pub agent: [f64; 2],
    pub objects: Vec<Object>,
    pub zones: Vec<Zone>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Rejection-sample `n` points in `[lo, hi]^2` satisfying `ok`, relaxing the
/// separation requirement geometrically when the arena gets crowded.
fn place<F>(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64, mut sep: f64, ok: F) -> Vec<[f64; 2]>
where
    F: Fn(&[f64; 2], f64) -> bool,
{
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while pts.len() < n {
        let p = [rng.random_range(lo..hi), rng.random_range(lo..hi)];
        if ok(&p, sep) && pts.iter().all(|q| dist(p, *q) >= sep) {
            pts.push(p);
            attempts = 0;
            continue;
        }
        attempts += 1;
        if attempts > 2000 {
            sep *= 0.9;
            attempts = 0;
        }
    }
    pts
}

impl SceneLayout {
    pub fn generate(n_objects: usize, n_zones: usize, layout_seed: u64, zone_seed: u64) -> Self {
        let mut zrng = seed::rng(zone_seed, &[tag::LAYOUT, 0]);
        let zone_pos = place(&mut zrng, n_zones, 0.15, 0.85, ZONE_SEP, |_, _| true);
        let zones: Vec<Zone> = zone_pos.into_iter().map(|pos| Zone { pos, radius: ZONE_RADIUS }).collect();
        let mut orng = seed::rng(layout_seed, &[tag::LAYOUT, 1]);
        let obj_pos = place(&mut orng, n_objects, 0.1, 0.9, OBJECT_SEP, |p, sep| {
            let clearance = ZONE_CLEARANCE.min(sep.max(GRASP_EPS));
            zones.iter().all(|z| dist(*p, z.pos) >= z.radius + clearance)
        });
        let objects = obj_pos.into_iter().enumerate().map(|(i, pos)| Object { pos, color: i }).collect();
        SceneLayout { agent: AGENT_HOME, objects, zones }
    }
}

fn base_description(color: &str, zone: &str) -> Vec<String> {
    ["put", color, "block", "in", "the", zone, "zone"].iter().map(|s| s.to_string()).collect()
}

/// Generate a task suite of `n_tasks` tasks.
///
/// - `spatial`: same object set, a fresh layout per task, target object 0,
///   target zone cycling through the layout's zones.
/// - `object`: shared zones, one object per task, target object = task index.
/// - `goal`: a single shared layout; each task is a distinct (object, zone) goal.
/// - `mixed`: fresh layout and a random goal per task.
pub fn make_suite(family: Family, n_tasks: usize, seed: u64) -> Result<Vec<TaskSpec>> {
    make_suite_with(family, n_tasks, seed, DEFAULT_PARAPHRASES)
}

pub fn make_suite_with(family: Family, n_tasks: usize, seed: u64, n_paraphrases: usize) -> Result<Vec<TaskSpec>> {
    if n_tasks == 0 {
        return Err(Error::Config("n_tasks must be at least 1".into()));
    }
    let (n_objects, n_zones) = match family {
        Family::Spatial | Family::Mixed => (3, 3),
        Family::Object => (n_tasks.max(3), 2),
        Family::Goal => {
            let side = ((n_tasks as f64).sqrt().ceil() as usize).max(2);
            (side, side)
        }
    };
    if n_objects > COLORS.len() || n_tasks > ZONE_NAMES.len() {
        return Err(Error::Config(format!("suite of {n_tasks} {family} tasks exceeds the vocabulary")));
    }
    let shared_layout = seed::derive(seed, &[tag::LAYOUT, 0xFFFF]);
    let mut goal_pairs: Vec<(usize, usize)> = (0..n_objects).flat_map(|o| (0..n_zones).map(move |z| (o, z))).collect();
    {
        use rand::seq::SliceRandom;
        goal_pairs.shuffle(&mut seed::rng(seed, &[tag::LAYOUT, 0xFFFE]));
    }
    let mut tasks = Vec::with_capacity(n_tasks);
    for t in 0..n_tasks {
        let own_layout = seed::derive(seed, &[tag::LAYOUT, t as u64]);
        let (layout_seed, zone_seed, target_object, target_zone, zone_word) = match family {
            Family::Spatial => (own_layout, own_layout, 0, t % n_zones, ZONE_NAMES[t]),
            Family::Object => (own_layout, shared_layout, t, 0, ZONE_NAMES[0]),
            Family::Goal => {
                let (o, z) = goal_pairs[t];
                (shared_layout, shared_layout, o, z, ZONE_NAMES[z])
            }
            Family::Mixed => {
                let mut r = seed::rng(own_layout, &[tag::LAYOUT, 2]);
                let o = r.random_range(0..n_objects);
                let z = r.random_range(0..n_zones);
                (own_layout, own_layout, o, z, ZONE_NAMES[t])
            }
        };
        let base = base_description(COLORS[target_object], zone_word);
        let descriptions = paraphrase(&base, n_paraphrases, seed::derive(seed, &[tag::PARAPHRASE, t as u64]))?;
        tasks.push(TaskSpec {
            family,
            target_object,
            target_zone,
            layout_seed,
            n_objects,
            n_zones,
            zone_seed,
            descriptions,
            eval_task_id: t,
        });
    }
    Ok(tasks)
}

/// Jittered initial state for an episode. Objects keep `2 * GRASP_EPS`
/// pairwise separation and start outside every zone.
pub fn initial_state(task: &TaskSpec, episode_seed: u64) -> WorldState {
    let layout = task.layout();
    let mut rng = seed::rng(episode_seed, &[tag::INIT, task.layout_seed]);
    let jitter = |rng: &mut ChaCha8Rng, p: [f64; 2]| {
        [
            (p[0] + rng.random_range(-INIT_JITTER..=INIT_JITTER)).clamp(0.02, 0.98),
            (p[1] + rng.random_range(-INIT_JITTER..=INIT_JITTER)).clamp(0.02, 0.98),
        ]
    };
    let valid = |objs: &[Object]| {
        objs.iter().enumerate().all(|(i, o)| {
            layout.zones.iter().all(|z| dist(o.pos, z.pos) >= z.radius + 0.02)
                && objs[..i].iter().all(|p| dist(o.pos, p.pos) >= 2.0 * GRASP_EPS)
        })
    };
    let mut objects = layout.objects.clone();
    for _ in 0..1000 {
        let candidate: Vec<Object> =
            layout.objects.iter().map(|o| Object { pos: jitter(&mut rng, o.pos), color: o.color }).collect();
        if valid(&candidate) {
            objects = candidate;
            break;
        }
    }
    let agent_pos = jitter(&mut rng, layout.agent);
    WorldState { agent_pos, gripper: false, held: None, objects, zones: layout.zones }
}

use super::{WorldState, DELTA_MAX, GRASP_EPS};
use crate::{Error, Result};

pub(crate) fn obs_len(n_objects: usize, n_zones: usize) -> usize {
    3 + 4 * n_objects + 3 * n_zones
}

/// Flat serialization of the full state:
/// `[agent_x, agent_y, gripper, (x, y, color, held) per object, (x, y, r) per zone]`.
fn flag(b: bool) -> f64 {
    if b {
        0.5
    } else {
        -0.5
    }
}

/// Serialise the full state. Coordinates are relative to the arena centre
/// and flags are +-0.5, so every entry is roughly zero-mean.
pub fn observe(state: &WorldState) -> Vec<f64> {
    let n_colors = super::COLORS.len() as f64;
    let centred = |p: [f64; 2]| [p[0] - 0.5, p[1] - 0.5];
    let mut obs = Vec::with_capacity(obs_len(state.objects.len(), state.zones.len()));
    obs.extend_from_slice(&centred(state.agent_pos));
    obs.push(flag(state.gripper));
    for (i, o) in state.objects.iter().enumerate() {
        obs.extend_from_slice(&centred(o.pos));
        obs.push((o.color as f64 + 1.0) / n_colors - 0.5);
        obs.push(flag(state.held == Some(i)));
    }
    for z in &state.zones {
        obs.extend_from_slice(&centred(z.pos));
        obs.push(z.radius);
    }
    obs
}

pub fn proprio(state: &WorldState) -> [f64; 3] {
    [state.agent_pos[0], state.agent_pos[1], if state.gripper { 1.0 } else { 0.0 }]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Advance the world by one action `(dx, dy, gripper_toggle)`.
///
/// Motion is applied first, then the gripper toggle.
pub fn step(state: &WorldState, action: [f64; 3]) -> Result<WorldState> {
    if action.iter().any(|a| !a.is_finite()) {
        return Err(Error::Input(format!("non-finite action {action:?}")));
    }
    let mut next = state.clone();
    for axis in 0..2 {
        let d = action[axis].clamp(-DELTA_MAX, DELTA_MAX);
        next.agent_pos[axis] = (next.agent_pos[axis] + d).clamp(0.0, 1.0);
    }
    if let Some(h) = next.held {
        next.objects[h].pos = next.agent_pos;
    }
    if action[2] >= 0.5 {
        if next.gripper {
            next.gripper = false;
            if let Some(h) = next.held.take() {
                next.objects[h].pos = next.agent_pos;
            }
        } else {
            next.gripper = true;
            next.held = next
                .objects
                .iter()
                .enumerate()
                .map(|(i, o)| (i, dist(o.pos, next.agent_pos)))
                .filter(|&(_, d)| d < GRASP_EPS)
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(i, _)| i);
        }
    }
    Ok(next)
}

/// The target object rests (not held) strictly inside the target zone.
pub fn success(state: &WorldState, task: &super::TaskSpec) -> bool {
    if state.held == Some(task.target_object) {
        return false;
    }
    let (Some(obj), Some(zone)) = (state.objects.get(task.target_object), state.zones.get(task.target_zone)) else {
        return false;
    };
    dist(obj.pos, zone.pos) < zone.radius
}

use serde::{Deserialize, Serialize};

use crate::memory::EpisodicMemory;
use crate::taskworld::Demonstration;
use crate::{Error, Result};

/// What the agent sees before acting: the first workspace frame and the
/// embedded goal description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalQuery {
    pub scene_embed: Vec<f64>,
    pub lang_embed: Vec<f64>,
    pub alpha_v: f64,
    pub alpha_l: f64,
    pub frac: f64,
}

impl RetrievalQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_v >= 0.0 && self.alpha_l >= 0.0) || !(self.alpha_v + self.alpha_l > 0.0) {
            return Err(Error::Config(format!(
                "retrieval weights must be non-negative with a positive sum, got ({}, {})",
                self.alpha_v, self.alpha_l
            )));
        }
        if !(self.frac > 0.0 && self.frac <= 1.0) {
            return Err(Error::Config(format!("retrieval fraction must be in (0, 1], got {}", self.frac)));
        }
        Ok(())
    }
}

pub fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Number of demonstrations returned for a memory of `n`: `ceil(frac * n)`,
/// at least one.
pub fn retrieval_count(n: usize, frac: f64) -> usize {
    ((frac * n as f64 - 1e-9).ceil() as usize).clamp(1, n.max(1))
}

/// `alpha_v * ||scene - first frame|| + alpha_l * ||lang - lang||` for one demo.
pub fn retrieval_distance(query: &RetrievalQuery, demo: &Demonstration) -> Result<f64> {
    let first = demo.vision_embeds.first().ok_or_else(|| Error::Input("demonstration without frames".into()))?;
    if first.len() != query.scene_embed.len() || demo.lang_embed.len() != query.lang_embed.len() {
        return Err(Error::Input("query and memory embedding sizes differ".into()));
    }
    Ok(query.alpha_v * l2(&query.scene_embed, first) + query.alpha_l * l2(&query.lang_embed, &demo.lang_embed))
}

/// Memory indices of the closest demonstrations, nearest first. Equal
/// distances keep insertion order.
pub fn retrieve_indices(mem: &EpisodicMemory, query: &RetrievalQuery) -> Result<Vec<usize>> {
    query.validate()?;
    if mem.is_empty() {
        return Err(Error::EmptyMemory);
    }
    let mut scored = mem
        .demos()
        .iter()
        .enumerate()
        .map(|(i, d)| Ok((retrieval_distance(query, d)?, i)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.truncate(retrieval_count(mem.len(), query.frac));
    Ok(scored.into_iter().map(|(_, i)| i).collect())
}

pub fn retrieve<'m>(mem: &'m EpisodicMemory, query: &RetrievalQuery) -> Result<Vec<&'m Demonstration>> {
    Ok(retrieve_indices(mem, query)?.into_iter().map(|i| &mem.demos()[i]).collect())
}

use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;

use super::{act, PolicyParams};
use crate::rollout::{Controller, Observation};
use crate::Result;

/// Drives the arm with actions sampled from the policy mixture, keeping the
/// last `window` frames of features.
pub struct PolicyController<'p> {
    params: &'p PolicyParams,
    lang: Vec<f64>,
    history: VecDeque<Vec<f64>>,
    first: Option<Vec<f64>>,
}

impl<'p> PolicyController<'p> {
    pub fn new(params: &'p PolicyParams) -> Self {
        Self { params, lang: Vec::new(), history: VecDeque::with_capacity(params.config.window), first: None }
    }
}

impl Controller for PolicyController<'_> {
    fn reset(&mut self, _description: &[String], lang_embed: &[f64]) {
        self.lang = lang_embed.to_vec();
        self.history.clear();
        self.first = None;
    }

    fn act(&mut self, o: &Observation<'_>, rng: &mut ChaCha8Rng) -> Result<[f64; 3]> {
        let h = self.params.config.window;
        let mut feat = Vec::with_capacity(self.params.config.frame_dim());
        feat.extend_from_slice(o.vision);
        feat.extend_from_slice(&self.lang);
        feat.extend_from_slice(&o.proprio);
        if self.first.is_none() {
            self.first = Some(feat.clone());
        }
        if self.history.len() == h {
            self.history.pop_front();
        }
        self.history.push_back(feat);
        let mut window = Vec::with_capacity(self.params.config.input_dim());
        let first = self.first.as_ref().expect("set above");
        for _ in self.history.len()..h {
            window.extend_from_slice(first);
        }
        for f in &self.history {
            window.extend_from_slice(f);
        }
        act(self.params, &window, rng)
    }
}

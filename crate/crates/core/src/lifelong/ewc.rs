use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::policy::{backward, demo_sample, PolicyParams, Sample};
use crate::taskworld::Demonstration;
use crate::{Error, Result};

/// Parameters after a task plus their diagonal Fisher estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EwcAnchor {
    pub params: Vec<f64>,
    pub fisher: Vec<f64>,
}

/// `(lambda / 2) * sum F (theta - theta*)^2` over all anchors, and its gradient.
pub fn ewc_penalty(params: &[f64], anchors: &[EwcAnchor], lambda: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; params.len()];
    let mut value = 0.0;
    if lambda == 0.0 {
        return (0.0, grad);
    }
    for a in anchors {
        assert_eq!(a.params.len(), params.len(), "anchor shape mismatch");
        for i in 0..params.len() {
            let d = params[i] - a.params[i];
            value += 0.5 * lambda * a.fisher[i] * d * d;
            grad[i] += lambda * a.fisher[i] * d;
        }
    }
    (value, grad)
}

/// Mean over `n_batches` random batches of the squared batch-loss gradient.
pub fn estimate_fisher(
    params: &PolicyParams,
    demos: &[Demonstration],
    n_batches: usize,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if demos.is_empty() {
        return Err(Error::Input("fisher estimate needs demonstrations".into()));
    }
    let index: Vec<(usize, usize)> =
        demos.iter().enumerate().flat_map(|(d, demo)| (0..demo.len()).map(move |t| (d, t))).collect();
    let mut fisher = vec![0.0; params.len()];
    for _ in 0..n_batches {
        let batch: Vec<Sample> = (0..batch_size)
            .map(|_| {
                let (d, t) = index[rng.random_range(0..index.len())];
                demo_sample(&params.config, &demos[d], t, 1.0)
            })
            .collect();
        let (_, g) = backward(params, &batch)?;
        for (f, gi) in fisher.iter_mut().zip(g) {
            *f += gi * gi / n_batches as f64;
        }
    }
    Ok(fisher)
}

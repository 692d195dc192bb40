use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Diagonal Gaussian mixture over a 3D action.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmParams {
    pub weights: Vec<f64>,
    pub log_weights: Vec<f64>,
    pub means: Vec<[f64; 3]>,
    pub stds: Vec<[f64; 3]>,
}

pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl GmmParams {
    /// Head layout: `[logits(K), means(K*3), raw scales(K*3)]`.
    pub(crate) fn from_head(head: &[f64], modes: usize, sigma_min: f64) -> Self {
        let logits = &head[..modes];
        let lse = log_sum_exp(logits);
        let log_weights: Vec<f64> = logits.iter().map(|l| l - lse).collect();
        let weights = log_weights.iter().map(|l| l.exp()).collect();
        let means = (0..modes)
            .map(|k| {
                let m = &head[modes + 3 * k..modes + 3 * k + 3];
                [m[0], m[1], m[2]]
            })
            .collect();
        let stds = (0..modes)
            .map(|k| {
                let s = &head[4 * modes + 3 * k..4 * modes + 3 * k + 3];
                [softplus(s[0]) + sigma_min, softplus(s[1]) + sigma_min, softplus(s[2]) + sigma_min]
            })
            .collect();
        Self { weights, log_weights, means, stds }
    }

    /// Build directly from mixture weights, means and stds.
    pub fn new(weights: Vec<f64>, means: Vec<[f64; 3]>, stds: Vec<[f64; 3]>) -> Self {
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Self { weights, log_weights, means, stds }
    }

    pub fn modes(&self) -> usize {
        self.weights.len()
    }

    /// Per-mode joint log-density plus log weight.
    pub(crate) fn component_log_probs(&self, action: [f64; 3]) -> Vec<f64> {
        (0..self.modes())
            .map(|k| {
                let mut lp = self.log_weights[k];
                for d in 0..3 {
                    let z = (action[d] - self.means[k][d]) / self.stds[k][d];
                    lp -= 0.5 * LN_2PI + self.stds[k][d].ln() + 0.5 * z * z;
                }
                lp
            })
            .collect()
    }
}

/// Negative log-likelihood of `action` under the mixture.
pub fn nll(gmm: &GmmParams, action: [f64; 3]) -> f64 {
    -log_sum_exp(&gmm.component_log_probs(action))
}

/// NLL and its gradient with respect to the raw head outputs.
pub(crate) fn nll_with_head_grad(
    head: &[f64],
    modes: usize,
    sigma_min: f64,
    action: [f64; 3],
    grad: &mut [f64],
) -> f64 {
    let gmm = GmmParams::from_head(head, modes, sigma_min);
    let lp = gmm.component_log_probs(action);
    let lse = log_sum_exp(&lp);
    for k in 0..modes {
        let r = (lp[k] - lse).exp();
        grad[k] = gmm.weights[k] - r;
        for d in 0..3 {
            let s = gmm.stds[k][d];
            let diff = action[d] - gmm.means[k][d];
            grad[modes + 3 * k + d] = -r * diff / (s * s);
            let dsigma = r * (1.0 / s - diff * diff / (s * s * s));
            grad[4 * modes + 3 * k + d] = dsigma * sigmoid(head[4 * modes + 3 * k + d]);
        }
    }
    -lse
}

/// Draw a mode from the mixture weights, then a Gaussian sample from it.
pub fn sample_action(gmm: &GmmParams, rng: &mut ChaCha8Rng) -> [f64; 3] {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut k = gmm.modes() - 1;
    for (i, w) in gmm.weights.iter().enumerate() {
        acc += w;
        if u < acc {
            k = i;
            break;
        }
    }
    let mut a = [0.0; 3];
    for d in 0..3 {
        let z: f64 = StandardNormal.sample(rng);
        a[d] = gmm.means[k][d] + gmm.stds[k][d] * z;
    }
    a
}

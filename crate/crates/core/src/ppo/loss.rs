//! The clipped surrogate objective and the scalar loss that is minimized:
//!
//! `loss = -mean(L_clip) + c1·mean((V - V_target)²) - c2·mean(S)`
//!
//! i.e. the surrogate and the entropy bonus are ascended while the value
//! error is descended.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::nn::{backward, entropy, forward, log_prob, MlpParams, Upstream};
use crate::{Error, Result};

/// `min(r·A, clip(r, 1-ε, 1+ε)·A)`.
pub fn clipped_objective(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    (ratio * advantage).min(clipped * advantage)
}

/// `-mean(policy_terms) + c1·mean(value_terms) - c2·mean(entropy_terms)`.
pub fn total_loss(policy_terms: &[f64], value_terms: &[f64], entropy_terms: &[f64], c1: f64, c2: f64) -> f64 {
    let mean = |xs: &[f64]| {
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    };
    -mean(policy_terms) + c1 * mean(value_terms) - c2 * mean(entropy_terms)
}

/// One minibatch of training samples.
#[derive(Debug, Clone, Copy)]
pub struct Minibatch<'a> {
    pub obs: ArrayView2<'a, f64>,
    pub actions: ArrayView2<'a, f64>,
    pub old_log_probs: &'a [f64],
    pub advantages: &'a [f64],
    pub targets: &'a [f64],
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    /// `-mean(L_clip)`.
    pub policy: f64,
    /// `mean((V - V_target)²)`.
    pub value: f64,
    pub entropy: f64,
    /// Fraction of samples with `|r - 1| > ε`.
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub max_ratio_deviation: f64,
}

/// Loss value and its gradients with respect to the network outputs.
pub fn ppo_loss(
    mean: &Array2<f64>,
    value: &Array1<f64>,
    log_std: &Array1<f64>,
    batch: &Minibatch<'_>,
    c1: f64,
    c2: f64,
    epsilon: f64,
) -> Result<(LossBreakdown, Upstream)> {
    let n = mean.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("empty minibatch".into()));
    }
    let actions = mean.ncols();
    if batch.actions.dim() != (n, actions)
        || batch.old_log_probs.len() != n
        || batch.advantages.len() != n
        || batch.targets.len() != n
        || value.len() != n
    {
        return Err(Error::Shape("minibatch fields have inconsistent lengths".into()));
    }
    let ls = log_std.as_slice().expect("contiguous log_std");
    let inv_var: Vec<f64> = ls.iter().map(|l| (-2.0 * l).exp()).collect();
    let scale = 1.0 / n as f64;

    let mut up = Upstream::zeros(n, actions);
    let mut policy_terms = Vec::with_capacity(n);
    let mut value_terms = Vec::with_capacity(n);
    let mut clipped = 0usize;
    let mut kl = 0.0;
    let mut max_dev: f64 = 0.0;
    for i in 0..n {
        let mu = mean.row(i);
        let act = batch.actions.row(i);
        let lp = log_prob(mu.as_slice().unwrap(), ls, act.as_slice().unwrap());
        let log_ratio = lp - batch.old_log_probs[i];
        let ratio = log_ratio.exp();
        let adv = batch.advantages[i];
        policy_terms.push(clipped_objective(ratio, adv, epsilon));
        if (ratio - 1.0).abs() > epsilon {
            clipped += 1;
        }
        max_dev = max_dev.max((ratio - 1.0).abs());
        kl += (ratio - 1.0) - log_ratio;

        // d min(rA, clip(r)A)/dr is A on the unclipped branch, 0 where the clip binds.
        let unclipped_active = ratio * adv <= ratio.clamp(1.0 - epsilon, 1.0 + epsilon) * adv;
        let d_lp = if unclipped_active { -scale * adv * ratio } else { 0.0 };
        for j in 0..actions {
            let diff = act[j] - mu[j];
            up.d_mean[[i, j]] = d_lp * diff * inv_var[j];
            up.d_log_std[j] += d_lp * (diff * diff * inv_var[j] - 1.0);
        }
        let err = value[i] - batch.targets[i];
        value_terms.push(err * err);
        up.d_value[i] = c1 * 2.0 * err * scale;
    }
    // entropy is state-independent: dS/dlog_std = 1 per dimension
    for j in 0..actions {
        up.d_log_std[j] -= c2;
    }
    let ent = entropy(ls);
    let total = total_loss(&policy_terms, &value_terms, &[ent], c1, c2);
    let breakdown = LossBreakdown {
        total,
        policy: -policy_terms.iter().sum::<f64>() * scale,
        value: value_terms.iter().sum::<f64>() * scale,
        entropy: ent,
        clip_fraction: clipped as f64 * scale,
        approx_kl: kl * scale,
        max_ratio_deviation: max_dev,
    };
    Ok((breakdown, up))
}

/// Forward pass, loss and full parameter gradient for one minibatch.
pub fn ppo_gradients(
    params: &MlpParams,
    batch: &Minibatch<'_>,
    c1: f64,
    c2: f64,
    epsilon: f64,
) -> Result<(LossBreakdown, MlpParams)> {
    let out = forward(params, batch.obs)?;
    let (breakdown, up) = ppo_loss(&out.mean, &out.value, &params.log_std, batch, c1, c2, epsilon)?;
    if !breakdown.total.is_finite() {
        return Err(Error::training(
            "loss",
            format!(
                "non-finite loss (policy {}, value {}, entropy {}, max |r-1| {})",
                breakdown.policy, breakdown.value, breakdown.entropy, breakdown.max_ratio_deviation
            ),
        ));
    }
    let grads = backward(params, &out.cache, batch.obs, &up)?;
    Ok((breakdown, grads))
}

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::advantage::normalize_advantages;
use super::buffer::RolloutBuffer;
use super::config::PpoConfig;
use super::loss::{ppo_gradients, Minibatch};
use crate::nn::{adam_step, AdamState, MlpParams};
use crate::{Error, Result};

/// Minibatch statistics averaged over one update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    /// `max |r - 1|` over the first minibatch, taken before any parameter
    /// change; zero up to rounding.
    pub first_ratio_deviation: f64,
    pub minibatches: usize,
}

/// `epochs_per_update` passes of shuffled minibatches with one Adam step each.
pub fn update<R: Rng + ?Sized>(
    params: &mut MlpParams,
    adam: &mut AdamState,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    let n = buffer.len();
    if buffer.advantages.len() != n || buffer.targets.len() != n {
        return Err(Error::Usage("advantages and targets must be computed before the update".into()));
    }
    let advantages = if config.normalize_advantages {
        normalize_advantages(&buffer.advantages)
    } else {
        buffer.advantages.clone()
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats = UpdateStats::default();
    for _ in 0..config.epochs_per_update {
        order.shuffle(rng);
        for idx in order.chunks(config.minibatch_size) {
            let obs = buffer.gather_obs(idx);
            let actions = buffer.actions.select(ndarray::Axis(0), idx);
            let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
            let (old, adv, tgt) = (pick(&buffer.log_probs), pick(&advantages), pick(&buffer.targets));
            let batch = Minibatch {
                obs: obs.view(),
                actions: actions.view(),
                old_log_probs: &old,
                advantages: &adv,
                targets: &tgt,
            };
            let (loss, grads) = ppo_gradients(params, &batch, config.c1, config.c2, config.epsilon)?;
            if stats.minibatches == 0 {
                stats.first_ratio_deviation = loss.max_ratio_deviation;
            }
            adam_step(params, &grads, adam, config.lr)?;
            stats.loss += loss.total;
            stats.policy_loss += loss.policy;
            stats.value_loss += loss.value;
            stats.entropy += loss.entropy;
            stats.clip_fraction += loss.clip_fraction;
            stats.approx_kl += loss.approx_kl;
            stats.minibatches += 1;
        }
    }
    let k = stats.minibatches.max(1) as f64;
    stats.loss /= k;
    stats.policy_loss /= k;
    stats.value_loss /= k;
    stats.entropy /= k;
    stats.clip_fraction /= k;
    stats.approx_kl /= k;
    Ok(stats)
}

//! Rollout collection across a set of environments.
//!
//! Transitions are stored env-major: row `e·T + t` holds step `t` of
//! environment `e`, so each environment's trajectory is a contiguous slice.

use ndarray::{aview1, Array2};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::advantage::{compute_advantages, compute_deltas, value_targets};
use crate::nn::{forward, sample_action, MlpParams};
use crate::room::{EnvState, Observation, Outcome};
use crate::{Error, Result};

/// One environment plus the policy-sampling stream that drives it.
#[derive(Debug, Clone)]
pub struct EnvWorker {
    pub env: EnvState,
    pub obs: Observation,
    pub policy_rng: ChaCha8Rng,
}

impl EnvWorker {
    pub fn new(env: EnvState, obs: Observation, policy_rng: ChaCha8Rng) -> Self {
        Self { env, obs, policy_rng }
    }
}

/// An episode that finished during a rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub env: usize,
    pub episode_return: f64,
    pub length: usize,
    pub outcome: Outcome,
}

#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    pub n_envs: usize,
    pub horizon: usize,
    pub obs: Array2<f32>,
    /// Sampled actions before the environment clamps them.
    pub actions: Array2<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    /// `V(s_{t+1})`, zero after a terminal step and `V(s_T)` at the horizon.
    pub next_values: Vec<f64>,
    pub deltas: Vec<f64>,
    pub advantages: Vec<f64>,
    pub targets: Vec<f64>,
    pub episodes: Vec<EpisodeSummary>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    /// Fills `deltas`, `advantages` and `targets`, one environment slice at a
    /// time so the recursion never crosses from one environment into the next.
    pub fn compute_returns(&mut self, gamma: f64) -> Result<()> {
        self.deltas = compute_deltas(&self.rewards, &self.values, &self.next_values, &self.dones, gamma)?;
        let t = self.horizon;
        self.advantages = Vec::with_capacity(self.len());
        for e in 0..self.n_envs {
            let span = e * t..(e + 1) * t;
            self.advantages
                .extend(compute_advantages(&self.deltas[span.clone()], &self.dones[span], gamma));
        }
        self.targets = value_targets(&self.advantages, &self.values);
        Ok(())
    }

    /// Observation rows `idx` widened to `f64`.
    pub fn gather_obs(&self, idx: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((idx.len(), self.obs.ncols()));
        for (mut row, &i) in out.rows_mut().into_iter().zip(idx) {
            for (d, &s) in row.iter_mut().zip(self.obs.row(i)) {
                *d = f64::from(s);
            }
        }
        out
    }
}

fn obs_matrix(workers: &[EnvWorker]) -> Array2<f64> {
    let dim = workers[0].obs.len();
    let mut m = Array2::zeros((workers.len(), dim));
    for (mut row, w) in m.rows_mut().into_iter().zip(workers) {
        for (d, &s) in row.iter_mut().zip(w.obs.as_slice()) {
            *d = f64::from(s);
        }
    }
    m
}

/// Runs every worker for `horizon` steps under the current policy.
///
/// Finished episodes restart in place. Values and log-probabilities are
/// recorded at collection time; advantages are filled in before returning.
pub fn collect_rollout(workers: &mut [EnvWorker], params: &MlpParams, horizon: usize, gamma: f64) -> Result<RolloutBuffer> {
    if workers.is_empty() || horizon == 0 {
        return Err(Error::InvalidInput("rollout needs at least one environment and one step".into()));
    }
    let n = workers.len();
    let dim = workers[0].obs.len();
    let actions_dim = params.log_std.len();
    let log_std = params.log_std.to_vec();
    let rows = n * horizon;
    let mut buf = RolloutBuffer {
        n_envs: n,
        horizon,
        obs: Array2::zeros((rows, dim)),
        actions: Array2::zeros((rows, actions_dim)),
        log_probs: vec![0.0; rows],
        rewards: vec![0.0; rows],
        values: vec![0.0; rows],
        dones: vec![false; rows],
        next_values: vec![0.0; rows],
        deltas: Vec::new(),
        advantages: Vec::new(),
        targets: Vec::new(),
        episodes: Vec::new(),
    };

    for t in 0..horizon {
        let obs = obs_matrix(workers);
        let out = forward(params, obs.view())?;
        for (e, w) in workers.iter_mut().enumerate() {
            let row = e * horizon + t;
            buf.obs.row_mut(row).assign(&aview1(w.obs.as_slice()));
            let mean = out.mean.row(e).to_vec();
            let (action, lp) = sample_action(&mean, &log_std, &mut w.policy_rng);
            buf.actions.row_mut(row).assign(&aview1(&action));
            buf.log_probs[row] = lp;
            buf.values[row] = out.value[e];

            let step = w.env.step([action[0], action[1]])?;
            buf.rewards[row] = step.reward;
            buf.dones[row] = step.done;
            if step.done {
                buf.episodes.push(EpisodeSummary {
                    env: e,
                    episode_return: w.env.episode_return(),
                    length: w.env.step_count(),
                    outcome: step.outcome,
                });
                w.obs = w.env.restart()?;
            } else {
                w.obs = step.observation;
            }
        }
    }

    // V(s_{t+1}) comes from the next row of the same environment, or from the
    // state the rollout stopped in.
    let bootstrap = forward(params, obs_matrix(workers).view())?.value;
    for e in 0..n {
        for t in 0..horizon {
            let row = e * horizon + t;
            buf.next_values[row] = if buf.dones[row] {
                0.0
            } else if t + 1 < horizon {
                buf.values[row + 1]
            } else {
                bootstrap[e]
            };
        }
    }
    buf.compute_returns(gamma)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{AudioClip, Partition, UtterancePool};
    use crate::nn::{log_prob, MlpShape};
    use crate::room::{EnvFactory, RoomConfig};
    use crate::seed::rng_indexed;
    use std::sync::Arc;

    fn tiny_room() -> RoomConfig {
        RoomConfig {
            width: 3.0,
            height: 3.0,
            hop: 8,
            obs_len_per_channel: 8,
            max_steps: 20,
            ..RoomConfig::default()
        }
    }

    fn tiny_factory() -> EnvFactory {
        let pools = (0..3)
            .map(|i| {
                let samples: Vec<f32> = (0..200).map(|k| ((k * (i + 1)) as f32 * 0.05).sin() * 0.5).collect();
                let clip = Arc::new(AudioClip::new(samples, 48_000).unwrap());
                Arc::new(UtterancePool::new(format!("s{i}"), Partition::Train, vec![clip]).unwrap())
            })
            .collect();
        EnvFactory::new(tiny_room(), pools)
    }

    fn tiny_shape() -> MlpShape {
        MlpShape {
            input: 16,
            hidden1: 8,
            hidden2: 8,
            actions: 2,
        }
    }

    fn workers(n: usize) -> Vec<EnvWorker> {
        let f = tiny_factory();
        (0..n)
            .map(|i| {
                let (env, obs) = f.make(100 + i as u64).unwrap();
                EnvWorker::new(env, obs, rng_indexed(5, "policy", i as u64))
            })
            .collect()
    }

    #[test]
    fn size_contract() {
        let p = MlpParams::init(tiny_shape(), 0);
        let buf = collect_rollout(&mut workers(4), &p, 128, 0.99).unwrap();
        assert_eq!(buf.len(), 512);
        assert_eq!(buf.obs.nrows(), 512);
        assert_eq!(buf.advantages.len(), 512);
        assert_eq!(buf.targets.len(), 512);
    }

    #[test]
    fn recorded_log_probs_match_recomputation() {
        let p = MlpParams::init(tiny_shape(), 1);
        let buf = collect_rollout(&mut workers(2), &p, 50, 0.99).unwrap();
        let obs = buf.gather_obs(&(0..buf.len()).collect::<Vec<_>>());
        let out = forward(&p, obs.view()).unwrap();
        for i in 0..buf.len() {
            let lp = log_prob(
                out.mean.row(i).as_slice().unwrap(),
                p.log_std.as_slice().unwrap(),
                buf.actions.row(i).as_slice().unwrap(),
            );
            assert_eq!(lp, buf.log_probs[i]);
            assert_eq!(out.value[i], buf.values[i]);
        }
    }

    #[test]
    fn done_flags_partition_episodes() {
        let p = MlpParams::init(tiny_shape(), 2);
        let horizon = 200;
        let buf = collect_rollout(&mut workers(3), &p, horizon, 0.99).unwrap();
        assert!(!buf.episodes.is_empty());
        for e in 0..3 {
            let dones = &buf.dones[e * horizon..(e + 1) * horizon];
            let mut lengths = Vec::new();
            let mut run = 0;
            for &d in dones {
                run += 1;
                if d {
                    lengths.push(run);
                    run = 0;
                }
            }
            // the first episode started at reset, so every segment is a whole episode
            let recorded: Vec<usize> = buf.episodes.iter().filter(|s| s.env == e).map(|s| s.length).collect();
            assert_eq!(lengths, recorded);
            for (t, &d) in dones.iter().enumerate() {
                if d {
                    assert_eq!(buf.next_values[e * horizon + t], 0.0);
                }
            }
        }
    }

    #[test]
    fn advantages_do_not_leak_between_environments() {
        let p = MlpParams::init(tiny_shape(), 3);
        let mut buf = collect_rollout(&mut workers(2), &p, 30, 0.99).unwrap();
        let before = buf.advantages[..30].to_vec();
        for r in &mut buf.rewards[30..] {
            *r += 100.0;
        }
        buf.compute_returns(0.99).unwrap();
        assert_eq!(buf.advantages[..30], before[..]);
    }

    #[test]
    fn collection_is_deterministic() {
        let p = MlpParams::init(tiny_shape(), 4);
        let a = collect_rollout(&mut workers(2), &p, 60, 0.99).unwrap();
        let b = collect_rollout(&mut workers(2), &p, 60, 0.99).unwrap();
        assert_eq!(a.actions, b.actions);
        assert_eq!(a.rewards, b.rewards);
        assert_eq!(a.advantages, b.advantages);
    }
}

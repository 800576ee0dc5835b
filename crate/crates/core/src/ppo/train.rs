//! The collect → advantages → update loop.
//!
//! Streams derived from the run seed:
//! - `train-env/i`: environment `i` (layouts and utterance draws),
//! - `train-policy/i`: action sampling in environment `i`,
//! - `minibatch/u`: minibatch shuffling in update `u`.
//!
//! A resumed run re-creates its environments from `resume-<u>` streams, so it
//! is reproducible but not bit-identical to an uninterrupted run.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::buffer::{collect_rollout, EnvWorker};
use super::config::PpoConfig;
use super::update::update;
use crate::nn::{AdamState, MlpParams};
use crate::room::{EnvFactory, Outcome};
use crate::seed::{derive_indexed, derive_seed, rng_indexed};
use crate::{Error, Result};

/// Episodes in the moving window behind `mean_episode_reward`.
pub const RETURN_WINDOW: usize = 100;

/// Per-update training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub update: usize,
    pub env_steps: usize,
    /// Mean return of the last `RETURN_WINDOW` finished episodes.
    pub mean_episode_reward: f64,
    /// Successes over all episodes finished so far.
    pub success_rate: f64,
    /// Success rate among episodes finished during this update's rollout.
    pub rollout_success_rate: f64,
    pub episodes: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub first_ratio_deviation: f64,
}

/// Counters persisted next to a checkpoint for resuming.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainProgress {
    pub updates: usize,
    pub env_steps: usize,
    pub episodes: usize,
    pub successes: usize,
    pub recent_returns: VecDeque<f64>,
}

pub struct Trainer {
    factory: EnvFactory,
    config: PpoConfig,
    seed: u64,
    params: MlpParams,
    adam: AdamState,
    workers: Vec<EnvWorker>,
    progress: TrainProgress,
}

fn make_workers(factory: &EnvFactory, n: usize, seed: u64) -> Result<Vec<EnvWorker>> {
    (0..n as u64)
        .map(|i| {
            let (env, obs) = factory.make(derive_indexed(seed, "train-env", i))?;
            Ok(EnvWorker::new(env, obs, rng_indexed(seed, "train-policy", i)))
        })
        .collect()
}

impl Trainer {
    pub fn new(factory: EnvFactory, params: MlpParams, config: PpoConfig, seed: u64) -> Result<Self> {
        let adam = AdamState::new(&params);
        Self::resume(factory, params, adam, config, seed, TrainProgress::default())
    }

    pub fn resume(
        factory: EnvFactory,
        params: MlpParams,
        adam: AdamState,
        config: PpoConfig,
        seed: u64,
        progress: TrainProgress,
    ) -> Result<Self> {
        config.validate()?;
        let obs_len = factory.room.obs_len();
        if params.shape().input != obs_len {
            return Err(Error::Shape(format!(
                "network input is {}, observations have {obs_len} samples",
                params.shape().input
            )));
        }
        let env_seed = if progress.updates == 0 {
            seed
        } else {
            derive_seed(seed, &format!("resume-{}", progress.updates))
        };
        let workers = make_workers(&factory, config.n_envs, env_seed)?;
        Ok(Self {
            factory,
            config,
            seed,
            params,
            adam,
            workers,
            progress,
        })
    }

    pub fn is_done(&self) -> bool {
        self.progress.updates >= self.config.n_updates()
    }

    /// One rollout plus one update.
    pub fn step(&mut self) -> Result<TrainStats> {
        let cfg = &self.config;
        let buffer = collect_rollout(&mut self.workers, &self.params, cfg.horizon, cfg.gamma)?;
        let mut rng = rng_indexed(self.seed, "minibatch", self.progress.updates as u64);
        let u = update(&mut self.params, &mut self.adam, &buffer, cfg, &mut rng)?;

        let p = &mut self.progress;
        p.updates += 1;
        p.env_steps += buffer.len();
        let rollout_successes = buffer.episodes.iter().filter(|e| e.outcome == Outcome::Success).count();
        p.episodes += buffer.episodes.len();
        p.successes += rollout_successes;
        for e in &buffer.episodes {
            p.recent_returns.push_back(e.episode_return);
            if p.recent_returns.len() > RETURN_WINDOW {
                p.recent_returns.pop_front();
            }
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let mean_return = if p.recent_returns.is_empty() {
            0.0
        } else {
            p.recent_returns.iter().sum::<f64>() / p.recent_returns.len() as f64
        };
        Ok(TrainStats {
            update: p.updates,
            env_steps: p.env_steps,
            mean_episode_reward: mean_return,
            success_rate: ratio(p.successes, p.episodes),
            rollout_success_rate: ratio(rollout_successes, buffer.episodes.len()),
            episodes: p.episodes,
            policy_loss: u.policy_loss,
            value_loss: u.value_loss,
            entropy: u.entropy,
            clip_fraction: u.clip_fraction,
            approx_kl: u.approx_kl,
            first_ratio_deviation: u.first_ratio_deviation,
        })
    }

    pub fn params(&self) -> &MlpParams {
        &self.params
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn progress(&self) -> &TrainProgress {
        &self.progress
    }

    pub fn config(&self) -> &PpoConfig {
        &self.config
    }

    pub fn factory(&self) -> &EnvFactory {
        &self.factory
    }

    pub fn into_params(self) -> MlpParams {
        self.params
    }
}

/// Trains until `total_steps` environment steps are consumed, calling
/// `on_update` after every update (e.g. to log or checkpoint).
pub fn train<F>(
    factory: &EnvFactory,
    params: MlpParams,
    config: &PpoConfig,
    seed: u64,
    mut on_update: F,
) -> Result<(MlpParams, Vec<TrainStats>)>
where
    F: FnMut(&Trainer, &TrainStats) -> Result<()>,
{
    let mut trainer = Trainer::new(factory.clone(), params, config.clone(), seed)?;
    let mut history = Vec::with_capacity(config.n_updates());
    while !trainer.is_done() {
        let stats = trainer.step()?;
        on_update(&trainer, &stats)?;
        history.push(stats);
    }
    Ok((trainer.into_params(), history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{AudioClip, Partition, UtterancePool};
    use crate::nn::MlpShape;
    use crate::ppo::update::update;
    use crate::ppo::{collect_rollout, RolloutBuffer};
    use crate::room::RoomConfig;
    use std::sync::Arc;

    fn factory() -> EnvFactory {
        let room = RoomConfig {
            width: 3.0,
            height: 3.0,
            hop: 8,
            obs_len_per_channel: 8,
            max_steps: 30,
            ..RoomConfig::default()
        };
        let pools = (0..3)
            .map(|i| {
                let samples: Vec<f32> = (0..300).map(|k| ((k * (i + 2)) as f32 * 0.03).sin() * 0.6).collect();
                let clip = Arc::new(AudioClip::new(samples, 48_000).unwrap());
                Arc::new(UtterancePool::new(format!("s{i}"), Partition::Train, vec![clip]).unwrap())
            })
            .collect();
        EnvFactory::new(room, pools)
    }

    fn shape() -> MlpShape {
        MlpShape {
            input: 16,
            hidden1: 12,
            hidden2: 10,
            actions: 2,
        }
    }

    fn small_config(total_steps: usize) -> PpoConfig {
        PpoConfig {
            horizon: 64,
            n_envs: 2,
            minibatch_size: 32,
            total_steps,
            ..PpoConfig::default()
        }
    }

    #[test]
    fn one_update_when_total_equals_batch() {
        let (_, hist) = train(&factory(), MlpParams::init(shape(), 0), &small_config(128), 1, |_, _| Ok(())).unwrap();
        assert_eq!(hist.len(), 1);
        assert_eq!(hist[0].env_steps, 128);
    }

    #[test]
    fn history_length_and_stat_ranges() {
        let cfg = small_config(128 * 5);
        let mut seen = 0;
        let (_, hist) = train(&factory(), MlpParams::init(shape(), 0), &cfg, 2, |_, _| {
            seen += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(hist.len(), 5);
        assert_eq!(seen, 5);
        for s in &hist {
            assert!((0.0..=1.0).contains(&s.clip_fraction));
            assert!((0.0..=1.0).contains(&s.success_rate));
            assert!(s.first_ratio_deviation <= 1e-12, "{}", s.first_ratio_deviation);
            for v in [s.mean_episode_reward, s.policy_loss, s.value_loss, s.entropy, s.approx_kl] {
                assert!(v.is_finite());
            }
        }
    }

    #[test]
    fn same_seed_same_params() {
        let cfg = small_config(256);
        let run = || train(&factory(), MlpParams::init(shape(), 3), &cfg, 9, |_, _| Ok(())).unwrap();
        let (a, ha) = run();
        let (b, hb) = run();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
        let (c, _) = train(&factory(), MlpParams::init(shape(), 3), &cfg, 10, |_, _| Ok(())).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn update_moves_params_and_reports_unit_first_ratio() {
        let cfg = small_config(128);
        let f = factory();
        let mut workers = make_workers(&f, 2, 4).unwrap();
        let mut p = MlpParams::init(shape(), 5);
        let before = p.clone();
        let buf = collect_rollout(&mut workers, &p, 64, cfg.gamma).unwrap();
        let mut adam = AdamState::new(&p);
        let mut rng = rng_indexed(0, "minibatch", 0);
        let stats = update(&mut p, &mut adam, &buf, &cfg, &mut rng).unwrap();
        assert_ne!(p, before);
        assert_eq!(stats.minibatches, cfg.epochs_per_update * 4);
        assert!(stats.first_ratio_deviation <= 1e-12);
    }

    #[test]
    fn normalized_update_ignores_advantage_scale() {
        let f = factory();
        let mut workers = make_workers(&f, 2, 4).unwrap();
        let init = MlpParams::init(shape(), 5);
        let buf = collect_rollout(&mut workers, &init, 64, 0.99).unwrap();
        let mut scaled = buf.clone();
        // a power of two keeps the normalized values bit-identical
        scaled.advantages.iter_mut().for_each(|a| *a *= 4.0);
        let run = |b: &RolloutBuffer, normalize: bool| {
            let cfg = PpoConfig {
                normalize_advantages: normalize,
                ..small_config(128)
            };
            let mut p = init.clone();
            let mut adam = AdamState::new(&p);
            update(&mut p, &mut adam, b, &cfg, &mut rng_indexed(0, "minibatch", 0)).unwrap();
            p
        };
        assert_eq!(run(&buf, true), run(&scaled, true));
        assert_ne!(run(&buf, false), run(&scaled, false));
    }

    #[test]
    fn non_finite_params_raise_training_error() {
        let cfg = small_config(128);
        let f = factory();
        let mut workers = make_workers(&f, 2, 4).unwrap();
        let mut p = MlpParams::init(shape(), 5);
        let buf = collect_rollout(&mut workers, &p, 64, cfg.gamma).unwrap();
        p.w_v[[0, 0]] = f64::INFINITY;
        let mut adam = AdamState::new(&p);
        let mut rng = rng_indexed(0, "minibatch", 0);
        let err = update(&mut p, &mut adam, &buf, &cfg, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Training { .. }), "{err}");
    }

    #[test]
    fn resume_continues_counting() {
        let cfg = small_config(128 * 3);
        let f = factory();
        let mut t = Trainer::new(f.clone(), MlpParams::init(shape(), 0), cfg.clone(), 1).unwrap();
        t.step().unwrap();
        let progress = t.progress().clone();
        let mut r = Trainer::resume(f, t.params().clone(), t.adam().clone(), cfg, 1, progress).unwrap();
        let s = r.step().unwrap();
        assert_eq!(s.update, 2);
        assert_eq!(s.env_steps, 256);
        assert!(!r.is_done());
        r.step().unwrap();
        assert!(r.is_done());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let bad = MlpShape { input: 20, ..shape() };
        assert!(matches!(
            Trainer::new(factory(), MlpParams::init(bad, 0), small_config(128), 0),
            Err(Error::Shape(_))
        ));
    }
}

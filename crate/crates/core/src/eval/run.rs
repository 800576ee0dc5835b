use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::report::{EpisodeRecord, EvalReport, TargetSummary};
use crate::audio::{build_pools, speaker_seed, SpeakerProfile, UtterancePool};
use crate::nn::{forward, sample_action, MlpParams, MlpShape};
use crate::ppo::{train, PpoConfig};
use crate::room::{EnvFactory, Outcome, PitchShiftRange, RoomConfig};
use crate::seed::{derive_indexed, derive_seed, rng_indexed};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    Trained,
    /// Independent uniform actions in `[-1, 1]²` every step.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Episodes per target speaker.
    pub n_episodes: usize,
    /// Evaluate every speaker as the target in turn and average.
    pub target_rotation: bool,
    pub pitch_shift: Option<PitchShiftRange>,
    pub policy_mode: PolicyMode,
    /// Act with the policy mean instead of sampling.
    pub deterministic_policy: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_episodes: 100,
            target_rotation: false,
            pitch_shift: None,
            policy_mode: PolicyMode::Trained,
            deterministic_policy: true,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_episodes == 0 {
            return Err(Error::Config("eval.episodes must be at least 1".into()));
        }
        if let Some(p) = self.pitch_shift {
            PitchShiftRange::new(p.min_pct, p.max_pct)?;
        }
        Ok(())
    }
}

/// How actions are chosen during evaluation.
#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    /// One network per evaluated target, in target order.
    Trained(&'a [MlpParams]),
    Random,
}

impl Policy<'_> {
    fn mode(&self) -> PolicyMode {
        match self {
            Policy::Trained(_) => PolicyMode::Trained,
            Policy::Random => PolicyMode::Random,
        }
    }
}

fn targets(factory: &EnvFactory, config: &EvalConfig) -> Vec<usize> {
    if config.target_rotation {
        (0..factory.room.n_speakers).collect()
    } else {
        vec![factory.room.target_index]
    }
}

/// Plays `n_episodes` per target and records every outcome.
///
/// Episode `i` uses the same geometry and utterance stream for every target
/// and every policy under one seed, so runs with a shared seed are paired.
/// Parameters are only read.
pub fn run_eval(factory: &EnvFactory, policy: Policy<'_>, config: &EvalConfig, seed: u64) -> Result<EvalReport> {
    config.validate()?;
    if policy.mode() != config.policy_mode {
        return Err(Error::Usage(format!(
            "eval config asks for a {:?} policy but a {:?} policy was supplied",
            config.policy_mode,
            policy.mode()
        )));
    }
    let targets = targets(factory, config);
    if let Policy::Trained(agents) = policy {
        if agents.len() != targets.len() {
            return Err(Error::InvalidInput(format!(
                "{} networks supplied for {} evaluated targets",
                agents.len(),
                targets.len()
            )));
        }
        let expected = factory.room.obs_len();
        if let Some(bad) = agents.iter().find(|p| p.shape().input != expected) {
            return Err(Error::format(
                "W1",
                format!("network input is {}, observations have {expected} samples", bad.shape().input),
            ));
        }
    }
    let factory = factory.with_pitch_shift(config.pitch_shift);
    let mut episodes = Vec::with_capacity(targets.len() * config.n_episodes);
    let mut per_target = Vec::with_capacity(targets.len());
    for (k, &target) in targets.iter().enumerate() {
        let f = factory.with_target(target);
        let params = match policy {
            Policy::Trained(agents) => Some(&agents[k]),
            Policy::Random => None,
        };
        let mut successes = 0;
        for i in 0..config.n_episodes {
            let rec = play_episode(&f, params, config.deterministic_policy, seed, target, i)?;
            if rec.outcome == Outcome::Success {
                successes += 1;
            }
            episodes.push(rec);
        }
        per_target.push(TargetSummary {
            target,
            speaker_id: f.pools[target].speaker_id().to_string(),
            n_episodes: config.n_episodes,
            successes,
            success_rate: successes as f64 / config.n_episodes as f64,
        });
    }
    Ok(EvalReport::new(
        config.clone(),
        seed,
        factory.room.clone(),
        factory.pools.iter().map(|p| p.len()).collect(),
        episodes,
        per_target,
    ))
}

fn play_episode(
    factory: &EnvFactory,
    params: Option<&MlpParams>,
    deterministic: bool,
    seed: u64,
    target: usize,
    index: usize,
) -> Result<EpisodeRecord> {
    let (mut env, mut obs) = factory.make(derive_indexed(seed, "eval-episode", index as u64))?;
    let mut rng = rng_indexed(derive_seed(seed, &format!("eval-policy:{target}")), "episode", index as u64);
    let layout = env.layout();
    loop {
        let action = match params {
            None => [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)],
            Some(p) => {
                let x = ndarray::Array2::from_shape_vec((1, obs.len()), obs.as_slice().iter().map(|&s| f64::from(s)).collect())
                    .map_err(|e| Error::Shape(e.to_string()))?;
                let out = forward(p, x.view())?;
                let mean = out.mean.row(0).to_vec();
                if deterministic {
                    [mean[0], mean[1]]
                } else {
                    let (a, _) = sample_action(&mean, p.log_std.as_slice().unwrap(), &mut rng);
                    [a[0], a[1]]
                }
            }
        };
        let step = env.step(action)?;
        if step.done {
            return Ok(EpisodeRecord {
                target,
                episode: index,
                outcome: step.outcome,
                steps: env.step_count(),
                reward: env.episode_return(),
                layout,
                pitch_factors: env.pitch_factors().to_vec(),
            });
        }
        obs = step.observation;
    }
}

/// Same as [`run_eval`]; the shift comes from `config.pitch_shift`, which must be set.
pub fn run_pitch_shift_eval(factory: &EnvFactory, policy: Policy<'_>, config: &EvalConfig, seed: u64) -> Result<EvalReport> {
    if config.pitch_shift.is_none() {
        return Err(Error::Usage("pitch-shift evaluation needs a pitch shift range".into()));
    }
    run_eval(factory, policy, config, seed)
}

/// `(network init, training)` seeds of an agent trained under `seed`.
pub fn agent_seeds(seed: u64) -> (u64, u64) {
    (derive_seed(seed, "network-init"), derive_seed(seed, "train"))
}

/// Trains one network for the factory's target speaker.
pub fn train_agent(factory: &EnvFactory, shape: MlpShape, ppo: &PpoConfig, seed: u64) -> Result<MlpParams> {
    let (init, run) = agent_seeds(seed);
    let (params, _) = train(factory, MlpParams::init(shape, init), ppo, run, |_, _| Ok(()))?;
    Ok(params)
}

/// Seed of the evaluation episodes under a master seed.
pub fn eval_seed(seed: u64) -> u64 {
    derive_seed(seed, "eval")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotConfig {
    pub n_train: usize,
    pub n_test: usize,
    /// Train utterances per speaker for the reduced agent.
    pub few_shot_utterances: usize,
    pub data_seed: u64,
    pub eval: EvalConfig,
}

impl Default for FewShotConfig {
    fn default() -> Self {
        Self {
            n_train: 500,
            n_test: 100,
            few_shot_utterances: 1,
            data_seed: 0,
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotReport {
    pub full: EvalReport,
    pub few_shot: EvalReport,
    pub train_pool_sizes: [usize; 2],
}

/// Trains on full pools and on `few_shot_utterances` per speaker, then
/// evaluates both on the same test pools and seeds.
pub fn run_few_shot_experiment(
    profiles: &[SpeakerProfile],
    room: &RoomConfig,
    ppo: &PpoConfig,
    shape: MlpShape,
    config: &FewShotConfig,
    seed: u64,
) -> Result<FewShotReport> {
    if config.few_shot_utterances == 0 || config.few_shot_utterances > config.n_train {
        return Err(Error::Config(format!(
            "few-shot utterance count must lie in 1..={}, got {}",
            config.n_train, config.few_shot_utterances
        )));
    }
    let mut train_pools = Vec::new();
    let mut test_pools = Vec::new();
    for p in profiles {
        let (train, test) = build_pools(
            p,
            config.n_train,
            config.n_test,
            speaker_seed(config.data_seed, &p.speaker_id),
        )?;
        train_pools.push(Arc::new(train));
        test_pools.push(Arc::new(test));
    }
    let reduced: Vec<Arc<UtterancePool>> = train_pools
        .iter()
        .map(|p| p.truncated(config.few_shot_utterances).map(Arc::new))
        .collect::<Result<_>>()?;

    let test_factory = EnvFactory::new(room.clone(), test_pools);
    let targets = targets(&test_factory, &config.eval);
    let agents = |pools: &[Arc<UtterancePool>]| -> Result<Vec<MlpParams>> {
        let f = EnvFactory::new(room.clone(), pools.to_vec());
        targets.iter().map(|&t| train_agent(&f.with_target(t), shape, ppo, seed)).collect()
    };
    let full_agents = agents(&train_pools)?;
    let few_agents = agents(&reduced)?;
    let eval_seed = eval_seed(seed);
    Ok(FewShotReport {
        full: run_eval(&test_factory, Policy::Trained(&full_agents), &config.eval, eval_seed)?,
        few_shot: run_eval(&test_factory, Policy::Trained(&few_agents), &config.eval, eval_seed)?,
        train_pool_sizes: [config.n_train, config.few_shot_utterances],
    })
}

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RoomConfig;
use super::render::{mix_block, soft_clip};
use crate::audio::{next_utterance, pitch_shift, AudioClip, UtterancePool};
use crate::{Error, Result};

/// Reward charged on every non-terminal step and on timeout.
pub const STEP_PENALTY: f64 = -0.001;
const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Running,
    Success,
    Collision,
    OutOfBounds,
    Timeout,
}

impl Outcome {
    pub fn is_terminal(self) -> bool {
        self != Outcome::Running
    }
}

/// Left-channel samples followed by right-channel samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub Vec<f32>);

impl Observation {
    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub outcome: Outcome,
}

/// Uniform pitch-shift magnitude range in percent; the sign is drawn per utterance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchShiftRange {
    pub min_pct: f64,
    pub max_pct: f64,
}

impl PitchShiftRange {
    pub fn new(min_pct: f64, max_pct: f64) -> Result<Self> {
        if !(0.0 <= min_pct && min_pct <= max_pct && max_pct < 50.0) {
            return Err(Error::Config(format!(
                "pitch shift range must satisfy 0 <= min <= max < 50, got {min_pct}:{max_pct}"
            )));
        }
        Ok(Self { min_pct, max_pct })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = if self.max_pct > self.min_pct {
            rng.gen_range(self.min_pct..=self.max_pct)
        } else {
            self.min_pct
        };
        if rng.gen_bool(0.5) {
            1.0 + u / 100.0
        } else {
            1.0 - u / 100.0
        }
    }
}

/// Picks each speaker's next utterance, optionally pitch-shifting it.
///
/// Utterance choice and pitch factors use separate streams, so enabling a
/// zero-width shift leaves the utterance sequence untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceDrawer {
    rng: ChaCha8Rng,
    pitch: Option<(PitchShiftRange, ChaCha8Rng)>,
    factors: Vec<f64>,
}

impl UtteranceDrawer {
    pub fn new(seed: u64, pitch_seed: u64, pitch: Option<PitchShiftRange>) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            pitch: pitch.map(|p| (p, ChaCha8Rng::seed_from_u64(pitch_seed))),
            factors: Vec::new(),
        }
    }

    pub fn draw(&mut self, pool: &UtterancePool) -> Result<Arc<AudioClip>> {
        let clip = next_utterance(pool, &mut self.rng)?.clone();
        match &mut self.pitch {
            None => Ok(clip),
            Some((range, rng)) => {
                let factor = range.sample(rng);
                self.factors.push(factor);
                Ok(Arc::new(pitch_shift(&clip, factor)?))
            }
        }
    }

    fn start_offset(&mut self, len: usize) -> usize {
        self.rng.gen_range(0..len)
    }

    /// Pitch factors applied so far, in draw order.
    pub fn factors(&self) -> &[f64] {
        &self.factors
    }
}

#[derive(Debug, Clone)]
pub struct SpeakerState {
    pub position: [f64; 2],
    pub pool: Arc<UtterancePool>,
    pub clip: Arc<AudioClip>,
    /// Index of the next sample to play from `clip`.
    pub playhead: usize,
}

impl PartialEq for SpeakerState {
    fn eq(&self, other: &Self) -> bool {
        self.position == other.position
            && self.playhead == other.playhead
            && (Arc::ptr_eq(&self.clip, &other.clip) || self.clip == other.clip)
            && (Arc::ptr_eq(&self.pool, &other.pool) || self.pool.speaker_id() == other.pool.speaker_id())
    }
}

/// Agent and speaker positions, used to pin an episode's geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub agent: [f64; 2],
    pub speakers: Vec<[f64; 2]>,
}

/// Complete simulator state for one environment instance.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    config: RoomConfig,
    agent_pos: [f64; 2],
    speakers: Vec<SpeakerState>,
    step_count: usize,
    left: Vec<f32>,
    right: Vec<f32>,
    rng: ChaCha8Rng,
    drawer: UtteranceDrawer,
    outcome: Outcome,
    episode_return: f64,
}

impl EnvState {
    /// Starts an episode with the agent on the lower wall and speakers placed
    /// uniformly in the interior.
    pub fn reset(config: &RoomConfig, pools: &[Arc<UtterancePool>], rng: ChaCha8Rng) -> Result<(Self, Observation)> {
        Self::reset_with(config, pools, rng, None)
    }

    pub fn reset_with(
        config: &RoomConfig,
        pools: &[Arc<UtterancePool>],
        mut rng: ChaCha8Rng,
        pitch: Option<PitchShiftRange>,
    ) -> Result<(Self, Observation)> {
        let drawer = UtteranceDrawer::new(rng.gen(), rng.gen(), pitch);
        let mut state = Self::empty(config, pools, rng, drawer)?;
        let layout = state.sample_layout()?;
        let obs = state.start_episode(&layout)?;
        Ok((state, obs))
    }

    /// Starts an episode with a fixed geometry.
    pub fn with_layout(
        config: &RoomConfig,
        pools: &[Arc<UtterancePool>],
        mut rng: ChaCha8Rng,
        pitch: Option<PitchShiftRange>,
        layout: &Layout,
    ) -> Result<(Self, Observation)> {
        if layout.speakers.len() != config.n_speakers {
            return Err(Error::InvalidInput(format!(
                "layout has {} speakers, room expects {}",
                layout.speakers.len(),
                config.n_speakers
            )));
        }
        let drawer = UtteranceDrawer::new(rng.gen(), rng.gen(), pitch);
        let mut state = Self::empty(config, pools, rng, drawer)?;
        let obs = state.start_episode(layout)?;
        Ok((state, obs))
    }

    fn empty(
        config: &RoomConfig,
        pools: &[Arc<UtterancePool>],
        rng: ChaCha8Rng,
        mut drawer: UtteranceDrawer,
    ) -> Result<Self> {
        config.validate()?;
        if pools.len() != config.n_speakers {
            return Err(Error::InvalidInput(format!(
                "{} pools supplied for {} speakers",
                pools.len(),
                config.n_speakers
            )));
        }
        if let Some(p) = pools.iter().find(|p| p.sample_rate() != config.sample_rate) {
            return Err(Error::InvalidInput(format!(
                "pool `{}` is at {} Hz, room renders at {} Hz",
                p.speaker_id(),
                p.sample_rate(),
                config.sample_rate
            )));
        }
        let speakers = pools
            .iter()
            .map(|pool| {
                Ok(SpeakerState {
                    position: [0.0, 0.0],
                    pool: pool.clone(),
                    clip: drawer.draw(pool)?,
                    playhead: 0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: config.clone(),
            agent_pos: [0.0, 0.0],
            speakers,
            step_count: 0,
            left: vec![0.0; config.obs_len_per_channel],
            right: vec![0.0; config.obs_len_per_channel],
            rng,
            drawer,
            outcome: Outcome::Running,
            episode_return: 0.0,
        })
    }

    fn sample_layout(&mut self) -> Result<Layout> {
        let c = &self.config;
        let agent = [self.rng.gen_range(0.0..=c.width), 0.0];
        let min_sep = 2.0 * c.contact_radius;
        let (x_lo, x_hi) = (c.contact_radius, c.width - c.contact_radius);
        let (y_lo, y_hi) = (c.contact_radius, c.height - c.contact_radius);
        if x_lo >= x_hi || y_lo >= y_hi {
            return Err(Error::Config("room is too small for the contact radius".into()));
        }
        let mut speakers: Vec<[f64; 2]> = Vec::with_capacity(c.n_speakers);
        let mut attempts = 0;
        while speakers.len() < c.n_speakers {
            if attempts == MAX_PLACEMENT_ATTEMPTS {
                return Err(Error::Config(format!(
                    "could not place {} speakers {min_sep} m apart after {MAX_PLACEMENT_ATTEMPTS} attempts",
                    c.n_speakers
                )));
            }
            attempts += 1;
            let p = [self.rng.gen_range(x_lo..x_hi), self.rng.gen_range(y_lo..y_hi)];
            let dist = |q: [f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]);
            if dist(agent) >= min_sep && speakers.iter().all(|&q| dist(q) >= min_sep) {
                speakers.push(p);
            }
        }
        Ok(Layout { agent, speakers })
    }

    fn start_episode(&mut self, layout: &Layout) -> Result<Observation> {
        self.agent_pos = layout.agent;
        for (sp, &pos) in self.speakers.iter_mut().zip(&layout.speakers) {
            sp.position = pos;
            sp.clip = self.drawer.draw(&sp.pool)?;
            sp.playhead = self.drawer.start_offset(sp.clip.len());
        }
        self.step_count = 0;
        self.outcome = Outcome::Running;
        self.episode_return = 0.0;
        let n = self.config.obs_len_per_channel;
        let (l, r) = self.render_stereo(n)?;
        self.left = l;
        self.right = r;
        Ok(make_observation(self))
    }

    /// Begins a new episode with fresh geometry, continuing all random streams.
    pub fn restart(&mut self) -> Result<Observation> {
        let layout = self.sample_layout()?;
        self.start_episode(&layout)
    }

    /// Renders `n` soft-clipped stereo samples and advances every playhead.
    pub fn render_stereo(&mut self, n: usize) -> Result<(Vec<f32>, Vec<f32>)> {
        let (l, r) = mix_block(self.agent_pos, &mut self.speakers, self.config.d_max, n, &mut self.drawer)?;
        Ok((
            l.into_iter().map(soft_clip).collect(),
            r.into_iter().map(soft_clip).collect(),
        ))
    }

    fn push_history(&mut self, l: &[f32], r: &[f32]) {
        let keep = self.left.len();
        for (hist, new) in [(&mut self.left, l), (&mut self.right, r)] {
            if new.len() >= keep {
                hist.copy_from_slice(&new[new.len() - keep..]);
            } else {
                hist.copy_within(new.len().., 0);
                hist[keep - new.len()..].copy_from_slice(new);
            }
        }
    }

    fn distance_to(&self, i: usize) -> f64 {
        let p = self.speakers[i].position;
        (p[0] - self.agent_pos[0]).hypot(p[1] - self.agent_pos[1])
    }

    /// Applies one velocity action. Non-finite components count as zero.
    pub fn step(&mut self, action: [f64; 2]) -> Result<StepResult> {
        if self.outcome.is_terminal() {
            return Err(Error::Usage(format!(
                "episode already finished with outcome {:?}",
                self.outcome
            )));
        }
        let c = &self.config;
        let a = action.map(|v| if v.is_finite() { v.clamp(-1.0, 1.0) } else { 0.0 });
        let stride = c.agent_speed * c.step_duration();
        self.agent_pos[0] += a[0] * stride;
        self.agent_pos[1] += a[1] * stride;
        self.step_count += 1;

        let [x, y] = self.agent_pos;
        let outside = x < 0.0 || x > c.width || y < 0.0 || y > c.height;
        let reached = |i: usize| self.distance_to(i) <= c.contact_radius;
        let target = c.target_index;
        let (outcome, reward) = if outside {
            (Outcome::OutOfBounds, -1.0)
        } else if (0..self.speakers.len()).any(|i| i != target && reached(i)) {
            (Outcome::Collision, -1.0)
        } else if reached(target) {
            (Outcome::Success, 1.0)
        } else if self.step_count >= c.max_steps {
            (Outcome::Timeout, STEP_PENALTY)
        } else {
            (Outcome::Running, STEP_PENALTY)
        };
        if outcome == Outcome::Running {
            let (l, r) = self.render_stereo(self.config.hop)?;
            self.push_history(&l, &r);
        }
        self.outcome = outcome;
        self.episode_return += reward;
        Ok(StepResult {
            observation: make_observation(self),
            reward,
            done: outcome.is_terminal(),
            outcome,
        })
    }

    pub fn config(&self) -> &RoomConfig {
        &self.config
    }

    pub fn agent_pos(&self) -> [f64; 2] {
        self.agent_pos
    }

    pub fn speakers(&self) -> &[SpeakerState] {
        &self.speakers
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn episode_return(&self) -> f64 {
        self.episode_return
    }

    pub fn layout(&self) -> Layout {
        Layout {
            agent: self.agent_pos,
            speakers: self.speakers.iter().map(|s| s.position).collect(),
        }
    }

    pub fn audio_history(&self) -> (&[f32], &[f32]) {
        (&self.left, &self.right)
    }

    pub fn pitch_factors(&self) -> &[f64] {
        self.drawer.factors()
    }
}

/// The most recent `obs_len_per_channel` samples of each channel, left first.
pub fn make_observation(state: &EnvState) -> Observation {
    let mut v = Vec::with_capacity(state.left.len() * 2);
    v.extend_from_slice(&state.left);
    v.extend_from_slice(&state.right);
    Observation(v)
}

/// Everything needed to spin up environment instances from a seed.
#[derive(Debug, Clone)]
pub struct EnvFactory {
    pub room: RoomConfig,
    pub pools: Vec<Arc<UtterancePool>>,
    pub pitch_shift: Option<PitchShiftRange>,
    /// Pins every episode to one geometry instead of sampling it.
    pub fixed_layout: Option<Layout>,
}

impl EnvFactory {
    pub fn new(room: RoomConfig, pools: Vec<Arc<UtterancePool>>) -> Self {
        Self {
            room,
            pools,
            pitch_shift: None,
            fixed_layout: None,
        }
    }

    pub fn with_target(&self, target_index: usize) -> Self {
        let mut f = self.clone();
        f.room.target_index = target_index;
        f
    }

    pub fn with_pitch_shift(&self, range: Option<PitchShiftRange>) -> Self {
        let mut f = self.clone();
        f.pitch_shift = range;
        f
    }

    pub fn make(&self, seed: u64) -> Result<(EnvState, Observation)> {
        let rng = ChaCha8Rng::seed_from_u64(seed);
        match &self.fixed_layout {
            Some(layout) => EnvState::with_layout(&self.room, &self.pools, rng, self.pitch_shift, layout),
            None => EnvState::reset_with(&self.room, &self.pools, rng, self.pitch_shift),
        }
    }
}

//! Flat `key = value` run configuration.
//!
//! Sources are applied in order: preset defaults, config file, command-line
//! flags. Blank lines and lines starting with `#` are ignored. Unknown keys
//! are rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use audionav::audio::{default_profiles, SpeakerProfile};
use audionav::eval::{EvalConfig, PolicyMode};
use audionav::ppo::PpoConfig;
use audionav::room::{PitchShiftRange, RoomConfig};
use audionav::{Error, Result};

/// Environment variable consulted for the master seed when `--seed` is absent.
pub const SEED_ENV: &str = "AUDIONAV_SEED";

/// Every accepted key with its meaning. `speaker.<i>.*` keys are listed once
/// with `<i>` standing for the speaker index.
pub const KEYS: &[(&str, &str)] = &[
    ("preset", "desk | paper: base values for all other keys"),
    ("seed", "master seed; every random stream is derived from it"),
    ("out", "root output directory"),
    ("data_dir", "pool manifest and exported WAVs (default <out>/data)"),
    ("checkpoint_dir", "checkpoints and training stats (default <out>/checkpoints)"),
    ("report_dir", "evaluation reports (default <out>/reports)"),
    ("data.n_train", "train utterances per speaker"),
    ("data.n_test", "test utterances per speaker"),
    ("data.export_wav", "gen-data also writes every utterance as a float WAV"),
    ("data.on_the_fly", "train/eval synthesize pools when no manifest exists"),
    ("speaker.<i>.id", "speaker name"),
    ("speaker.<i>.f0", "fundamental frequency in Hz"),
    ("speaker.<i>.harmonic_gains", "comma-separated harmonic amplitudes"),
    ("speaker.<i>.am_rate", "amplitude-modulation rate in Hz"),
    ("speaker.<i>.jitter_pct", "per-utterance f0 jitter as a fraction"),
    ("room.width", "meters"),
    ("room.height", "meters"),
    ("room.d_max", "distance at which a source becomes inaudible, meters"),
    ("room.contact_radius", "meters"),
    ("room.agent_speed", "meters per second at |v| = 1"),
    ("room.sample_rate", "Hz"),
    ("room.hop", "samples rendered per step"),
    ("room.obs_len_per_channel", "samples per channel in an observation"),
    ("room.max_steps", "episode cap; reaching it is a timeout"),
    ("room.target_index", "speaker the agent must reach"),
    ("ppo.gamma", "discount factor"),
    ("ppo.c1", "value-loss coefficient"),
    ("ppo.c2", "entropy coefficient"),
    ("ppo.epsilon", "probability-ratio clip range"),
    ("ppo.horizon", "steps per environment per rollout"),
    ("ppo.epochs_per_update", "passes over each rollout"),
    ("ppo.minibatch_size", "samples per Adam step"),
    ("ppo.lr", "Adam learning rate"),
    ("ppo.total_steps", "environment steps to train for"),
    ("ppo.n_envs", "environments per rollout"),
    ("ppo.normalize_advantages", "standardize advantages per update"),
    ("train.utterances", "train utterances per speaker used for training; 0 = all"),
    ("train.checkpoint_every", "updates between periodic checkpoints"),
    ("train.resume", "continue from the latest checkpoint"),
    ("eval.episodes", "episodes per evaluated target"),
    ("eval.target_rotation", "evaluate every speaker as target and average"),
    ("eval.pitch_shift", "none | MIN:MAX percent"),
    ("eval.policy", "trained | random"),
    ("eval.deterministic", "act with the policy mean"),
    ("eval.checkpoint", "parameter file to evaluate instead of the trained target's final checkpoint"),
    ("eval.few_shot_utterances", "0 = off; otherwise train full-pool and reduced agents and compare"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Paper,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Config(format!("preset must be `desk` or `paper`, got `{other}`"))),
        }
    }
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub seed: u64,
    pub out: PathBuf,
    data_dir: Option<PathBuf>,
    checkpoint_dir: Option<PathBuf>,
    report_dir: Option<PathBuf>,
    pub n_train: usize,
    pub n_test: usize,
    pub export_wav: bool,
    pub on_the_fly: bool,
    pub profiles: Vec<SpeakerProfile>,
    pub room: RoomConfig,
    pub ppo: PpoConfig,
    pub train_utterances: usize,
    pub checkpoint_every: usize,
    pub resume: bool,
    pub eval: EvalConfig,
    pub checkpoint: Option<PathBuf>,
    pub few_shot_utterances: usize,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let ppo = match preset {
            Preset::Desk => PpoConfig::desk(),
            Preset::Paper => PpoConfig::paper(),
        };
        Self {
            preset,
            seed: 0,
            out: PathBuf::from("run"),
            data_dir: None,
            checkpoint_dir: None,
            report_dir: None,
            n_train: 500,
            n_test: 100,
            export_wav: false,
            on_the_fly: true,
            profiles: default_profiles(),
            room: RoomConfig::default(),
            ppo,
            train_utterances: 0,
            checkpoint_every: 10,
            resume: false,
            eval: EvalConfig::default(),
            checkpoint: None,
            few_shot_utterances: 0,
        }
    }

    /// Builds a config from ordered `(key, value)` pairs. A `preset` entry
    /// anywhere selects the base values; later entries override earlier ones.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let preset = pairs
            .iter()
            .rev()
            .find(|(k, _)| k == "preset")
            .map(|(_, v)| v.parse())
            .transpose()?
            .unwrap_or(Preset::Desk);
        let mut cfg = Self::preset(preset);
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        cfg.room.n_speakers = cfg.profiles.len();
        cfg.data_dir = Some(cfg.data_dir());
        cfg.checkpoint_dir = Some(cfg.checkpoint_dir());
        cfg.report_dir = Some(cfg.report_dir());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn data_dir(&self) -> PathBuf {
        self.data_dir.clone().unwrap_or_else(|| self.out.join("data"))
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.checkpoint_dir.clone().unwrap_or_else(|| self.out.join("checkpoints"))
    }

    pub fn report_dir(&self) -> PathBuf {
        self.report_dir.clone().unwrap_or_else(|| self.out.join("reports"))
    }

    /// Seed of the synthetic utterance pools.
    pub fn data_seed(&self) -> u64 {
        audionav::seed::derive_seed(self.seed, "data")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::Config(format!(
                "data.n_train and data.n_test must be positive (got {} and {})",
                self.n_train, self.n_test
            )));
        }
        if self.train_utterances > self.n_train {
            return Err(Error::Config(format!(
                "train.utterances = {} exceeds data.n_train = {}",
                self.train_utterances, self.n_train
            )));
        }
        if self.few_shot_utterances > self.n_train {
            return Err(Error::Config(format!(
                "eval.few_shot_utterances = {} exceeds data.n_train = {}",
                self.few_shot_utterances, self.n_train
            )));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::Config("train.checkpoint_every must be positive".into()));
        }
        if self.profiles.is_empty() {
            return Err(Error::Config("at least one speaker profile is required".into()));
        }
        for (i, p) in self.profiles.iter().enumerate() {
            p.validate()
                .map_err(|e| Error::Config(format!("speaker.{i}: {e}")))?;
        }
        self.room.validate()?;
        self.ppo.validate()?;
        self.eval.validate()?;
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "preset" => self.preset = v.parse()?,
            "seed" => self.seed = parse(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "data_dir" => self.data_dir = Some(PathBuf::from(v)),
            "checkpoint_dir" => self.checkpoint_dir = Some(PathBuf::from(v)),
            "report_dir" => self.report_dir = Some(PathBuf::from(v)),
            "data.n_train" => self.n_train = parse(key, v)?,
            "data.n_test" => self.n_test = parse(key, v)?,
            "data.export_wav" => self.export_wav = parse(key, v)?,
            "data.on_the_fly" => self.on_the_fly = parse(key, v)?,
            "room.width" => self.room.width = parse(key, v)?,
            "room.height" => self.room.height = parse(key, v)?,
            "room.d_max" => self.room.d_max = parse(key, v)?,
            "room.contact_radius" => self.room.contact_radius = parse(key, v)?,
            "room.agent_speed" => self.room.agent_speed = parse(key, v)?,
            "room.sample_rate" => self.room.sample_rate = parse(key, v)?,
            "room.hop" => self.room.hop = parse(key, v)?,
            "room.obs_len_per_channel" => self.room.obs_len_per_channel = parse(key, v)?,
            "room.max_steps" => self.room.max_steps = parse(key, v)?,
            "room.target_index" => self.room.target_index = parse(key, v)?,
            "ppo.gamma" => self.ppo.gamma = parse(key, v)?,
            "ppo.c1" => self.ppo.c1 = parse(key, v)?,
            "ppo.c2" => self.ppo.c2 = parse(key, v)?,
            "ppo.epsilon" => self.ppo.epsilon = parse(key, v)?,
            "ppo.horizon" => self.ppo.horizon = parse(key, v)?,
            "ppo.epochs_per_update" => self.ppo.epochs_per_update = parse(key, v)?,
            "ppo.minibatch_size" => self.ppo.minibatch_size = parse(key, v)?,
            "ppo.lr" => self.ppo.lr = parse(key, v)?,
            "ppo.total_steps" => self.ppo.total_steps = parse_count(key, v)?,
            "ppo.n_envs" => self.ppo.n_envs = parse(key, v)?,
            "ppo.normalize_advantages" => self.ppo.normalize_advantages = parse(key, v)?,
            "train.utterances" => self.train_utterances = parse(key, v)?,
            "train.checkpoint_every" => self.checkpoint_every = parse(key, v)?,
            "train.resume" => self.resume = parse(key, v)?,
            "eval.episodes" => self.eval.n_episodes = parse(key, v)?,
            "eval.target_rotation" => self.eval.target_rotation = parse(key, v)?,
            "eval.pitch_shift" => self.eval.pitch_shift = parse_pitch(v)?,
            "eval.policy" => {
                self.eval.policy_mode = match v {
                    "trained" => PolicyMode::Trained,
                    "random" => PolicyMode::Random,
                    other => return Err(Error::Config(format!("eval.policy must be `trained` or `random`, got `{other}`"))),
                }
            }
            "eval.deterministic" => self.eval.deterministic_policy = parse(key, v)?,
            "eval.checkpoint" => self.checkpoint = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "eval.few_shot_utterances" => self.few_shot_utterances = parse(key, v)?,
            _ => return self.set_speaker(key, v),
        }
        Ok(())
    }

    fn set_speaker(&mut self, key: &str, v: &str) -> Result<()> {
        let unknown = || Error::Config(format!("unknown config key `{key}`"));
        let rest = key.strip_prefix("speaker.").ok_or_else(unknown)?;
        let (index, field) = rest.split_once('.').ok_or_else(unknown)?;
        let i: usize = index.parse().map_err(|_| unknown())?;
        if i > self.profiles.len() {
            return Err(Error::Config(format!(
                "speaker.{i}: speakers must be numbered consecutively (next index is {})",
                self.profiles.len()
            )));
        }
        if i == self.profiles.len() {
            self.profiles.push(SpeakerProfile {
                speaker_id: format!("speaker{i}"),
                f0: 0.0,
                harmonic_gains: vec![1.0],
                am_rate: 4.0,
                jitter_pct: 0.02,
            });
        }
        let p = &mut self.profiles[i];
        match field {
            "id" => p.speaker_id = v.to_string(),
            "f0" => p.f0 = parse(key, v)?,
            "harmonic_gains" => {
                p.harmonic_gains = v
                    .split(',')
                    .map(|g| parse(key, g.trim()))
                    .collect::<Result<_>>()?
            }
            "am_rate" => p.am_rate = parse(key, v)?,
            "jitter_pct" => p.jitter_pct = parse(key, v)?,
            _ => return Err(unknown()),
        }
        Ok(())
    }

    /// The effective configuration in file syntax; reading it back gives an
    /// identical config.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("preset", self.preset.as_str().into());
        kv("seed", self.seed.to_string());
        kv("out", self.out.display().to_string());
        kv("data_dir", self.data_dir().display().to_string());
        kv("checkpoint_dir", self.checkpoint_dir().display().to_string());
        kv("report_dir", self.report_dir().display().to_string());
        kv("data.n_train", self.n_train.to_string());
        kv("data.n_test", self.n_test.to_string());
        kv("data.export_wav", self.export_wav.to_string());
        kv("data.on_the_fly", self.on_the_fly.to_string());
        for (i, p) in self.profiles.iter().enumerate() {
            kv(&format!("speaker.{i}.id"), p.speaker_id.clone());
            kv(&format!("speaker.{i}.f0"), p.f0.to_string());
            let gains: Vec<String> = p.harmonic_gains.iter().map(|g| g.to_string()).collect();
            kv(&format!("speaker.{i}.harmonic_gains"), gains.join(","));
            kv(&format!("speaker.{i}.am_rate"), p.am_rate.to_string());
            kv(&format!("speaker.{i}.jitter_pct"), p.jitter_pct.to_string());
        }
        let r = &self.room;
        kv("room.width", r.width.to_string());
        kv("room.height", r.height.to_string());
        kv("room.d_max", r.d_max.to_string());
        kv("room.contact_radius", r.contact_radius.to_string());
        kv("room.agent_speed", r.agent_speed.to_string());
        kv("room.sample_rate", r.sample_rate.to_string());
        kv("room.hop", r.hop.to_string());
        kv("room.obs_len_per_channel", r.obs_len_per_channel.to_string());
        kv("room.max_steps", r.max_steps.to_string());
        kv("room.target_index", r.target_index.to_string());
        let p = &self.ppo;
        kv("ppo.gamma", p.gamma.to_string());
        kv("ppo.c1", p.c1.to_string());
        kv("ppo.c2", p.c2.to_string());
        kv("ppo.epsilon", p.epsilon.to_string());
        kv("ppo.horizon", p.horizon.to_string());
        kv("ppo.epochs_per_update", p.epochs_per_update.to_string());
        kv("ppo.minibatch_size", p.minibatch_size.to_string());
        kv("ppo.lr", p.lr.to_string());
        kv("ppo.total_steps", p.total_steps.to_string());
        kv("ppo.n_envs", p.n_envs.to_string());
        kv("ppo.normalize_advantages", p.normalize_advantages.to_string());
        kv("train.utterances", self.train_utterances.to_string());
        kv("train.checkpoint_every", self.checkpoint_every.to_string());
        kv("train.resume", self.resume.to_string());
        let e = &self.eval;
        kv("eval.episodes", e.n_episodes.to_string());
        kv("eval.target_rotation", e.target_rotation.to_string());
        kv(
            "eval.pitch_shift",
            e.pitch_shift.map_or("none".into(), |p| format!("{}:{}", p.min_pct, p.max_pct)),
        );
        kv(
            "eval.policy",
            match e.policy_mode {
                PolicyMode::Trained => "trained",
                PolicyMode::Random => "random",
            }
            .into(),
        );
        kv("eval.deterministic", e.deterministic_policy.to_string());
        kv(
            "eval.checkpoint",
            self.checkpoint.as_ref().map_or(String::new(), |c| c.display().to_string()),
        );
        kv("eval.few_shot_utterances", self.few_shot_utterances.to_string());
        s
    }
}

/// Reads `key = value` lines.
pub fn parse_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    parse_text(&text)
}

pub fn parse_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected `key = value`, found `{line}`", n + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`")))
}

/// Accepts plain integers and scientific notation such as `3e5`.
fn parse_count(key: &str, v: &str) -> Result<usize> {
    if let Ok(n) = v.parse() {
        return Ok(n);
    }
    let f: f64 = parse(key, v)?;
    if f.fract() == 0.0 && f >= 0.0 && f <= usize::MAX as f64 {
        Ok(f as usize)
    } else {
        Err(Error::Config(format!("{key}: `{v}` is not a whole number")))
    }
}

fn parse_pitch(v: &str) -> Result<Option<PitchShiftRange>> {
    if v == "none" || v.is_empty() {
        return Ok(None);
    }
    let (lo, hi) = v
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("eval.pitch_shift: expected MIN:MAX, got `{v}`")))?;
    let lo: f64 = parse("eval.pitch_shift", lo.trim())?;
    let hi: f64 = parse("eval.pitch_shift", hi.trim())?;
    PitchShiftRange::new(lo, hi).map(Some)
}

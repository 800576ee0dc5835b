use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::clip::AudioClip;
use super::synth::{synth_utterance, SpeakerProfile};
use crate::seed::derive_indexed;
use crate::{Error, Result};

/// Utterance durations are drawn uniformly from this range, in seconds.
pub const UTTERANCE_DURATION_S: (f64, f64) = (1.0, 4.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Test,
}

impl Partition {
    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Test => "test",
        }
    }
}

impl std::str::FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Partition::Train),
            "test" => Ok(Partition::Test),
            other => Err(Error::InvalidInput(format!("unknown partition `{other}`"))),
        }
    }
}

/// One speaker's utterances for one partition.
#[derive(Debug, Clone)]
pub struct UtterancePool {
    speaker_id: String,
    partition: Partition,
    clips: Vec<Arc<AudioClip>>,
}

impl UtterancePool {
    pub fn new(speaker_id: impl Into<String>, partition: Partition, clips: Vec<Arc<AudioClip>>) -> Result<Self> {
        let speaker_id = speaker_id.into();
        let Some(first) = clips.first() else {
            return Err(Error::InvalidInput(format!("pool for `{speaker_id}` has no clips")));
        };
        let rate = first.sample_rate();
        if let Some(c) = clips.iter().find(|c| c.sample_rate() != rate) {
            return Err(Error::InvalidInput(format!(
                "pool for `{speaker_id}` mixes sample rates {rate} and {}",
                c.sample_rate()
            )));
        }
        Ok(Self {
            speaker_id,
            partition,
            clips,
        })
    }

    pub fn speaker_id(&self) -> &str {
        &self.speaker_id
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn clips(&self) -> &[Arc<AudioClip>] {
        &self.clips
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        self.clips[0].sample_rate()
    }

    /// Keeps only the first `n` clips.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Self::new(self.speaker_id.clone(), self.partition, self.clips.iter().take(n).cloned().collect())
    }
}

/// Seed and duration of one synthesized utterance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipSpec {
    pub seed: u64,
    pub duration_s: f64,
}

fn clip_spec(master: u64, partition: Partition, index: usize) -> ClipSpec {
    let seed = derive_indexed(master, partition.as_str(), index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_d0a7);
    let (lo, hi) = UTTERANCE_DURATION_S;
    let duration_s = rng.gen_range(lo..=hi);
    ClipSpec { seed, duration_s }
}

/// Per-clip seeds and durations for a train/test split.
///
/// Clip `i` of a partition depends only on `(seed, partition, i)`, so a
/// one-utterance training pool is a prefix of the full one and the test
/// partition does not depend on `n_train` at all.
pub fn utterance_specs(n_train: usize, n_test: usize, seed: u64) -> (Vec<ClipSpec>, Vec<ClipSpec>) {
    let train = (0..n_train).map(|i| clip_spec(seed, Partition::Train, i)).collect();
    let test = (0..n_test).map(|i| clip_spec(seed, Partition::Test, i)).collect();
    (train, test)
}

/// Synthesizes disjoint train and test pools for one speaker.
pub fn build_pools(
    profile: &SpeakerProfile,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(UtterancePool, UtterancePool)> {
    if n_train == 0 || n_test == 0 {
        return Err(Error::InvalidInput(format!(
            "pools need at least one clip per partition (n_train={n_train}, n_test={n_test})"
        )));
    }
    profile.validate()?;
    let (train_specs, test_specs) = utterance_specs(n_train, n_test, seed);
    let synth = |specs: Vec<ClipSpec>| -> Result<Vec<Arc<AudioClip>>> {
        specs
            .into_iter()
            .map(|s| synth_utterance(profile, s.duration_s, s.seed).map(Arc::new))
            .collect()
    };
    let train = UtterancePool::new(profile.speaker_id.clone(), Partition::Train, synth(train_specs)?)?;
    let test = UtterancePool::new(profile.speaker_id.clone(), Partition::Test, synth(test_specs)?)?;
    Ok((train, test))
}

/// Uniformly random clip from the pool; consecutive repeats are allowed.
pub fn next_utterance<'a, R: Rng + ?Sized>(pool: &'a UtterancePool, rng: &mut R) -> Result<&'a Arc<AudioClip>> {
    if pool.is_empty() {
        return Err(Error::InvalidInput(format!("pool for `{}` is empty", pool.speaker_id)));
    }
    Ok(&pool.clips[rng.gen_range(0..pool.clips.len())])
}

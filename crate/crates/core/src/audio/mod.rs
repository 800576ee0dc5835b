//! Speech-like audio: clips, synthetic speakers, utterance pools, WAV files
//! and pitch shifting.

mod clip;
mod manifest;
mod pitch;
mod pool;
mod synth;
mod wav;

pub use clip::{AudioClip, DEFAULT_SAMPLE_RATE};
pub use manifest::{speaker_seed, ClipSource, Manifest, ManifestClip, MANIFEST_HEADER};
pub use pitch::{pitch_shift, resample, PITCH_FACTOR_RANGE};
pub use pool::{build_pools, next_utterance, utterance_specs, ClipSpec, Partition, UtterancePool};
pub use synth::{
    default_profiles, synth_utterance, synth_utterance_at, SpeakerProfile, AM_DEPTH, EDGE_SILENCE_S,
    PEAK_AMPLITUDE,
};
pub use wav::{load_wav, load_wav_resampled, save_wav, WavEncoding};

//! Synthetic speaker voices.
//!
//! An utterance is a harmonic complex at a jittered fundamental, shaped by a
//! syllable-rate amplitude envelope and framed by short silences. Speakers
//! differ in fundamental, harmonic envelope and syllable rate, which is
//! enough for a listener to tell them apart by timbre and pitch.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::clip::{AudioClip, DEFAULT_SAMPLE_RATE};
use crate::{Error, Result};

/// Peak amplitude of every synthesized utterance.
pub const PEAK_AMPLITUDE: f64 = 0.9;
/// Silence before and after the voiced part of an utterance.
pub const EDGE_SILENCE_S: f64 = 0.05;
/// Depth of the syllable-rate modulation; the envelope swings in `[1 - AM_DEPTH, 1]`.
pub const AM_DEPTH: f64 = 0.6;
const FADE_S: f64 = 0.01;
/// Harmonics above this fraction of the sample rate are dropped.
const HARMONIC_CEILING: f64 = 0.45;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerProfile {
    pub speaker_id: String,
    /// Fundamental frequency in Hz.
    pub f0: f64,
    /// Amplitude weight of harmonic `k + 1`.
    pub harmonic_gains: Vec<f64>,
    /// Syllable-rate amplitude modulation in Hz; 0 disables it.
    pub am_rate: f64,
    /// Maximum relative deviation of the per-utterance fundamental.
    pub jitter_pct: f64,
}

impl SpeakerProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("speaker `{}`: {msg}", self.speaker_id)));
        if !(self.f0.is_finite() && self.f0 > 0.0) {
            return bad(format!("f0 must be positive, got {}", self.f0));
        }
        if !(self.am_rate.is_finite() && self.am_rate >= 0.0) {
            return bad(format!("am_rate must be non-negative, got {}", self.am_rate));
        }
        if !(0.0..0.5).contains(&self.jitter_pct) {
            return bad(format!("jitter_pct must lie in [0, 0.5), got {}", self.jitter_pct));
        }
        if self.harmonic_gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return bad("harmonic_gains must be finite and non-negative".into());
        }
        if !self.harmonic_gains.iter().any(|g| *g > 0.0) {
            return bad("at least one harmonic gain must be positive".into());
        }
        Ok(())
    }
}

/// The three stock voices: two low male-range voices and one higher
/// female-range voice, each with its own harmonic envelope and syllable rate.
pub fn default_profiles() -> Vec<SpeakerProfile> {
    vec![
        SpeakerProfile {
            speaker_id: "male_low".into(),
            f0: 110.0,
            harmonic_gains: vec![1.0, 0.8, 0.6, 0.5, 0.35, 0.25, 0.18, 0.12, 0.08, 0.05],
            am_rate: 4.0,
            jitter_pct: 0.02,
        },
        SpeakerProfile {
            speaker_id: "male_high".into(),
            f0: 150.0,
            harmonic_gains: vec![0.5, 1.0, 0.7, 0.3, 0.45, 0.2, 0.12, 0.08],
            am_rate: 5.0,
            jitter_pct: 0.02,
        },
        SpeakerProfile {
            speaker_id: "female".into(),
            f0: 220.0,
            harmonic_gains: vec![1.0, 0.45, 0.25, 0.12, 0.06],
            am_rate: 3.5,
            jitter_pct: 0.02,
        },
    ]
}

/// Synthesizes one utterance at the default 48 kHz rate.
pub fn synth_utterance(profile: &SpeakerProfile, duration_s: f64, seed: u64) -> Result<AudioClip> {
    synth_utterance_at(profile, duration_s, seed, DEFAULT_SAMPLE_RATE)
}

pub fn synth_utterance_at(
    profile: &SpeakerProfile,
    duration_s: f64,
    seed: u64,
    sample_rate: u32,
) -> Result<AudioClip> {
    profile.validate()?;
    if !(0.5..=10.0).contains(&duration_s) {
        return Err(Error::InvalidInput(format!(
            "utterance duration must lie in [0.5, 10] s, got {duration_s}"
        )));
    }
    if sample_rate == 0 {
        return Err(Error::InvalidInput("sample_rate must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = f64::from(sample_rate);
    let n = (duration_s * sr).round() as usize;

    let jitter = if profile.jitter_pct > 0.0 {
        rng.gen_range(-profile.jitter_pct..=profile.jitter_pct)
    } else {
        0.0
    };
    let f = profile.f0 * (1.0 + jitter);

    // (gain, phasor state, phasor step) per harmonic
    type Phasor = (f64, f64);
    let mut partials: Vec<(f64, Phasor, Phasor)> = Vec::new();
    for (k, &gain) in profile.harmonic_gains.iter().enumerate() {
        let freq = f * (k + 1) as f64;
        let phase = rng.gen_range(0.0..TAU);
        if gain > 0.0 && freq < HARMONIC_CEILING * sr {
            let w = TAU * freq / sr;
            partials.push((gain, (phase.cos(), phase.sin()), (w.cos(), w.sin())));
        }
    }
    if partials.is_empty() {
        return Err(Error::InvalidInput(format!(
            "speaker `{}`: no harmonic below {:.0} Hz at sample rate {sample_rate}",
            profile.speaker_id,
            HARMONIC_CEILING * sr
        )));
    }
    let am_phase = rng.gen_range(0.0..TAU);

    let silence = ((EDGE_SILENCE_S * sr) as usize).min(n / 10);
    let fade = ((FADE_S * sr) as usize).max(1);
    let voiced_end = n - silence;

    let mut out = vec![0.0f64; n];
    for (i, slot) in out.iter_mut().enumerate().take(voiced_end).skip(silence) {
        let mut s = 0.0;
        for (gain, (c, sn), (wc, ws)) in partials.iter_mut() {
            s += *gain * *sn;
            let next_c = *c * *wc - *sn * *ws;
            *sn = *sn * *wc + *c * *ws;
            *c = next_c;
        }
        let t = i as f64 / sr;
        let am = if profile.am_rate > 0.0 {
            1.0 - AM_DEPTH * 0.5 * (1.0 - (TAU * profile.am_rate * t + am_phase).cos())
        } else {
            1.0
        };
        let from_start = (i - silence) as f64;
        let to_end = (voiced_end - 1 - i) as f64;
        let edge = from_start.min(to_end);
        let ramp = if edge < fade as f64 {
            0.5 * (1.0 - (std::f64::consts::PI * edge / fade as f64).cos())
        } else {
            1.0
        };
        *slot = s * am * ramp;
    }

    let peak = out.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak <= 0.0 {
        return Err(Error::InvalidInput("synthesized utterance is silent".into()));
    }
    let scale = PEAK_AMPLITUDE / peak;
    let samples = out.into_iter().map(|s| (s * scale) as f32).collect();
    AudioClip::new(samples, sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::{num_complex::Complex, FftPlanner};

    fn pure_profile(f0: f64) -> SpeakerProfile {
        SpeakerProfile {
            speaker_id: "pure".into(),
            f0,
            harmonic_gains: vec![1.0],
            am_rate: 0.0,
            jitter_pct: 0.0,
        }
    }

    fn fft_peak_hz(clip: &AudioClip) -> f64 {
        let mut buf: Vec<Complex<f64>> =
            clip.samples().iter().map(|&s| Complex::new(f64::from(s), 0.0)).collect();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        let half = buf.len() / 2;
        let (bin, _) = buf[1..half]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        (bin + 1) as f64 * f64::from(clip.sample_rate()) / buf.len() as f64
    }

    #[test]
    fn identical_seed_gives_identical_clip() {
        let p = &default_profiles()[0];
        let a = synth_utterance(p, 1.0, 7).unwrap();
        let b = synth_utterance(p, 1.0, 7).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert_ne!(a.samples(), synth_utterance(p, 1.0, 8).unwrap().samples());
    }

    #[test]
    fn pure_tone_peaks_at_f0() {
        let clip = synth_utterance(&pure_profile(110.0), 1.0, 3).unwrap();
        assert_eq!(clip.len(), 48_000);
        let bin_hz = 48_000.0 / clip.len() as f64;
        assert!((fft_peak_hz(&clip) - 110.0).abs() <= bin_hz);
    }

    #[test]
    fn peak_is_normalized() {
        for (i, p) in default_profiles().iter().enumerate() {
            for seed in 0..4 {
                let clip = synth_utterance(p, 0.5 + i as f64, seed).unwrap();
                assert!((f64::from(clip.peak()) - PEAK_AMPLITUDE).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn edges_are_silent() {
        let clip = synth_utterance(&default_profiles()[1], 1.0, 1).unwrap();
        let edge = (EDGE_SILENCE_S * 48_000.0) as usize;
        assert!(clip.samples()[..edge].iter().all(|&s| s == 0.0));
        assert!(clip.samples()[clip.len() - edge..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn rejects_bad_profiles_and_durations() {
        let good = pure_profile(110.0);
        assert!(synth_utterance(&good, 0.4, 0).is_err());
        assert!(synth_utterance(&good, 10.5, 0).is_err());
        for bad in [
            SpeakerProfile { f0: 0.0, ..good.clone() },
            SpeakerProfile { am_rate: -1.0, ..good.clone() },
            SpeakerProfile { jitter_pct: 0.5, ..good.clone() },
            SpeakerProfile { harmonic_gains: vec![0.0, 0.0], ..good.clone() },
            SpeakerProfile { harmonic_gains: vec![1.0, -0.1], ..good.clone() },
        ] {
            assert!(matches!(synth_utterance(&bad, 1.0, 0), Err(Error::InvalidInput(_))));
        }
    }

    #[test]
    fn default_voices_are_distinct() {
        let ps = default_profiles();
        assert_eq!(ps.len(), 3);
        let f0s: Vec<f64> = ps.iter().map(|p| p.f0).collect();
        assert_eq!(f0s, vec![110.0, 150.0, 220.0]);
        for p in &ps {
            p.validate().unwrap();
        }
    }
}

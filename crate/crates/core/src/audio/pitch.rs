use super::clip::AudioClip;
use crate::{Error, Result};

/// Accepted pitch-shift factors.
pub const PITCH_FACTOR_RANGE: (f64, f64) = (0.5, 2.0);

/// Reads `input` at positions `0, step, 2·step, ...` with linear interpolation.
fn interpolate(input: &[f32], step: f64, out_len: usize) -> Vec<f32> {
    let last = input.len() - 1;
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * step;
            let idx = (pos.floor() as usize).min(last);
            let frac = pos - idx as f64;
            let a = f64::from(input[idx]);
            let b = f64::from(input[(idx + 1).min(last)]);
            ((a + (b - a) * frac) as f32).clamp(-1.0, 1.0)
        })
        .collect()
}

/// Shifts pitch by `factor` through plain resampling, so the duration
/// shrinks by the same factor: `len_out = floor(len_in / factor)`.
pub fn pitch_shift(clip: &AudioClip, factor: f64) -> Result<AudioClip> {
    let (lo, hi) = PITCH_FACTOR_RANGE;
    if !(lo..=hi).contains(&factor) {
        return Err(Error::InvalidInput(format!(
            "pitch factor must lie in [{lo}, {hi}], got {factor}"
        )));
    }
    if factor == 1.0 {
        return Ok(clip.clone());
    }
    let out_len = ((clip.len() as f64 / factor).floor() as usize).max(1);
    AudioClip::new(interpolate(clip.samples(), factor, out_len), clip.sample_rate())
}

/// Converts a clip to another sample rate, keeping its duration.
pub fn resample(clip: &AudioClip, sample_rate: u32) -> Result<AudioClip> {
    if sample_rate == 0 {
        return Err(Error::InvalidInput("sample_rate must be positive".into()));
    }
    if sample_rate == clip.sample_rate() {
        return Ok(clip.clone());
    }
    let ratio = f64::from(clip.sample_rate()) / f64::from(sample_rate);
    let out_len = ((clip.len() as f64 / ratio).floor() as usize).max(1);
    AudioClip::new(interpolate(clip.samples(), ratio, out_len), sample_rate)
}

use crate::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 48_000;

/// A mono waveform with every sample in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidInput("sample_rate must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::InvalidInput("audio clip has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|s| !(-1.0..=1.0).contains(s)) {
            return Err(Error::InvalidInput(format!(
                "sample {i} = {} lies outside [-1, 1]",
                samples[i]
            )));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invariant_violations() {
        assert!(AudioClip::new(vec![], 48_000).is_err());
        assert!(AudioClip::new(vec![0.0], 0).is_err());
        assert!(AudioClip::new(vec![0.5, 1.5], 48_000).is_err());
        assert!(AudioClip::new(vec![f32::NAN], 48_000).is_err());
        let c = AudioClip::new(vec![-1.0, 0.25, 1.0], 16_000).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.peak(), 1.0);
    }
}

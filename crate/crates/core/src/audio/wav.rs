//! Mono WAV ingestion and export (PCM16 or IEEE float32).

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::clip::AudioClip;
use super::pitch::resample;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavEncoding {
    #[default]
    Pcm16,
    Float32,
}

fn header_error(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::format("header", io.to_string()),
        hound::Error::FormatError(msg) => Error::format("header", msg),
        hound::Error::Unsupported => Error::format("audio_format", "unsupported WAV encoding"),
        other => Error::format("header", other.to_string()),
    }
}

fn data_error(e: hound::Error) -> Error {
    Error::format("data", e.to_string())
}

/// Reads a mono PCM16 or float32 WAV file at its native sample rate.
///
/// Float samples outside `[-1, 1]` are clamped; non-finite ones are rejected.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} does not exist", path.display()),
        )));
    }
    let reader = WavReader::open(path).map_err(header_error)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::format(
            "channels",
            format!("expected mono, found {} channels", spec.channels),
        ));
    }
    let samples: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f32::from(v) / 32768.0).map_err(data_error))
            .collect::<Result<_>>()?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| {
                let v = s.map_err(data_error)?;
                if v.is_finite() {
                    Ok(v.clamp(-1.0, 1.0))
                } else {
                    Err(Error::format("data", "non-finite float sample"))
                }
            })
            .collect::<Result<_>>()?,
        (SampleFormat::Int, bits) => {
            return Err(Error::format(
                "bits_per_sample",
                format!("integer PCM must be 16-bit, found {bits}-bit"),
            ))
        }
        (SampleFormat::Float, bits) => {
            return Err(Error::format(
                "bits_per_sample",
                format!("float PCM must be 32-bit, found {bits}-bit"),
            ))
        }
    };
    if samples.is_empty() {
        return Err(Error::format("data", "no samples"));
    }
    AudioClip::new(samples, spec.sample_rate)
}

/// Reads a WAV file and converts it to `sample_rate` by linear interpolation.
pub fn load_wav_resampled(path: impl AsRef<Path>, sample_rate: u32) -> Result<AudioClip> {
    resample(&load_wav(path)?, sample_rate)
}

pub fn save_wav(clip: &AudioClip, path: impl AsRef<Path>, encoding: WavEncoding) -> Result<()> {
    let (bits_per_sample, sample_format) = match encoding {
        WavEncoding::Pcm16 => (16, SampleFormat::Int),
        WavEncoding::Float32 => (32, SampleFormat::Float),
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample,
        sample_format,
    };
    let write_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::format("data", other.to_string()),
    };
    let mut writer = WavWriter::create(path, spec).map_err(write_err)?;
    for &s in clip.samples() {
        match encoding {
            WavEncoding::Pcm16 => {
                let q = (f64::from(s) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(q).map_err(write_err)?;
            }
            WavEncoding::Float32 => writer.write_sample(s).map_err(write_err)?,
        }
    }
    writer.finalize().map_err(write_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{default_profiles, synth_utterance};

    fn max_abs_diff(a: &AudioClip, b: &AudioClip) -> f32 {
        a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).abs()).fold(0.0, f32::max)
    }

    #[test]
    fn pcm16_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.wav");
        let clip = synth_utterance(&default_profiles()[0], 1.0, 9).unwrap();
        save_wav(&clip, &path, WavEncoding::Pcm16).unwrap();
        let back = load_wav(&path).unwrap();
        assert_eq!(back.len(), clip.len());
        assert_eq!(back.sample_rate(), 48_000);
        assert!(max_abs_diff(&clip, &back) <= 1.0 / 32768.0);

        let extremes = AudioClip::new(vec![-1.0, 1.0, 0.0], 48_000).unwrap();
        save_wav(&extremes, &path, WavEncoding::Pcm16).unwrap();
        assert!(max_abs_diff(&extremes, &load_wav(&path).unwrap()) <= 1.0 / 32768.0);
    }

    #[test]
    fn float_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.wav");
        let clip = synth_utterance(&default_profiles()[2], 1.0, 9).unwrap();
        save_wav(&clip, &path, WavEncoding::Float32).unwrap();
        assert_eq!(load_wav(&path).unwrap(), clip);
    }

    #[test]
    fn stereo_is_rejected_with_field_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 48_000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for _ in 0..20 {
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        match load_wav(&path) {
            Err(Error::Format { field, .. }) => assert_eq!(field, "channels"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn unsupported_bit_depth_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pcm24.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 48_000,
            bits_per_sample: 24,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(0i32).unwrap();
        w.finalize().unwrap();
        match load_wav(&path) {
            Err(Error::Format { field, .. }) => assert_eq!(field, "bits_per_sample"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_files_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.wav");
        let clip = synth_utterance(&default_profiles()[1], 1.0, 2).unwrap();
        save_wav(&clip, &path, WavEncoding::Pcm16).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        for keep in [0, 4, 12, 30, 44 + 1001] {
            let cut = dir.path().join(format!("cut{keep}.wav"));
            std::fs::write(&cut, &bytes[..keep]).unwrap();
            assert!(matches!(load_wav(&cut), Err(Error::Format { .. })), "keep={keep}");
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_wav("/nonexistent/x.wav"), Err(Error::Io(_))));
    }

    #[test]
    fn load_resamples_to_configured_rate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("low.wav");
        let clip = AudioClip::new(vec![0.25; 16_000], 16_000).unwrap();
        save_wav(&clip, &path, WavEncoding::Float32).unwrap();
        let up = load_wav_resampled(&path, 48_000).unwrap();
        assert_eq!((up.len(), up.sample_rate()), (48_000, 48_000));
    }
}

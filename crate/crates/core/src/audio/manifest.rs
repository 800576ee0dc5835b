//! Plain-text pool index.
//!
//! ```text
//! # audionav pool manifest v1
//! profile<TAB>male_low<TAB>f0=110<TAB>am_rate=4<TAB>jitter_pct=0.02<TAB>gains=1,0.8,0.6
//! clip<TAB>male_low<TAB>train<TAB>synth<TAB>seed=123<TAB>duration=2.5
//! clip<TAB>male_low<TAB>test<TAB>wav<TAB>path=clips/male_low_test_000.wav
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Relative WAV paths
//! resolve against the manifest's directory.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use super::pool::{utterance_specs, ClipSpec, Partition, UtterancePool};
use super::synth::{synth_utterance_at, SpeakerProfile};
use super::wav::load_wav_resampled;
use crate::seed::derive_seed;
use crate::{Error, Result};

pub const MANIFEST_HEADER: &str = "# audionav pool manifest v1";

#[derive(Debug, Clone, PartialEq)]
pub enum ClipSource {
    Synth { seed: u64, duration_s: f64 },
    Wav { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestClip {
    pub speaker_id: String,
    pub partition: Partition,
    pub source: ClipSource,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub profiles: Vec<SpeakerProfile>,
    pub clips: Vec<ManifestClip>,
}

/// Seed of one speaker's pools under a data seed.
pub fn speaker_seed(data_seed: u64, speaker_id: &str) -> u64 {
    derive_seed(data_seed, &format!("speaker:{speaker_id}"))
}

impl Manifest {
    /// Index of fully synthetic pools; identical to calling `build_pools`
    /// per profile with [`speaker_seed`].
    pub fn synthetic(profiles: &[SpeakerProfile], n_train: usize, n_test: usize, data_seed: u64) -> Result<Self> {
        if n_train == 0 || n_test == 0 {
            return Err(Error::InvalidInput(format!(
                "pools need at least one clip per partition (n_train={n_train}, n_test={n_test})"
            )));
        }
        let mut clips = Vec::new();
        for p in profiles {
            p.validate()?;
            let (train, test) = utterance_specs(n_train, n_test, speaker_seed(data_seed, &p.speaker_id));
            for (partition, specs) in [(Partition::Train, train), (Partition::Test, test)] {
                clips.extend(specs.into_iter().map(|ClipSpec { seed, duration_s }| ManifestClip {
                    speaker_id: p.speaker_id.clone(),
                    partition,
                    source: ClipSource::Synth { seed, duration_s },
                }));
            }
        }
        Ok(Self {
            profiles: profiles.to_vec(),
            clips,
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MANIFEST_HEADER}");
        for p in &self.profiles {
            let gains: Vec<String> = p.harmonic_gains.iter().map(|g| g.to_string()).collect();
            let _ = writeln!(
                out,
                "profile\t{}\tf0={}\tam_rate={}\tjitter_pct={}\tgains={}",
                p.speaker_id,
                p.f0,
                p.am_rate,
                p.jitter_pct,
                gains.join(",")
            );
        }
        for c in &self.clips {
            let source = match &c.source {
                ClipSource::Synth { seed, duration_s } => format!("synth\tseed={seed}\tduration={duration_s}"),
                ClipSource::Wav { path } => format!("wav\tpath={}", path.display()),
            };
            let _ = writeln!(out, "clip\t{}\t{}\t{source}", c.speaker_id, c.partition.as_str());
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, first)) if first.trim() == MANIFEST_HEADER => {}
            _ => return Err(Error::format("header", format!("manifest must start with `{MANIFEST_HEADER}`"))),
        }
        let mut manifest = Manifest::default();
        for (i, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = i + 1;
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "profile" => manifest.profiles.push(parse_profile(&fields, lineno)?),
                "clip" => manifest.clips.push(parse_clip(&fields, lineno)?),
                other => return Err(Error::format(format!("line {lineno}"), format!("unknown record `{other}`"))),
            }
        }
        for c in &manifest.clips {
            if !manifest.profiles.iter().any(|p| p.speaker_id == c.speaker_id) {
                return Err(Error::format(
                    "speaker_id",
                    format!("clip references undeclared speaker `{}`", c.speaker_id),
                ));
            }
        }
        Ok(manifest)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Materializes `(train, test)` pools in profile order.
    pub fn build_pools(&self, sample_rate: u32, base_dir: &Path) -> Result<Vec<(UtterancePool, UtterancePool)>> {
        let train = self.build_partition(Partition::Train, sample_rate, base_dir)?;
        let test = self.build_partition(Partition::Test, sample_rate, base_dir)?;
        Ok(train.into_iter().zip(test).collect())
    }

    /// Materializes one partition's pools in profile order.
    pub fn build_partition(&self, partition: Partition, sample_rate: u32, base_dir: &Path) -> Result<Vec<UtterancePool>> {
        let mut out = Vec::with_capacity(self.profiles.len());
        for p in &self.profiles {
            let mut clips = Vec::new();
            for c in self
                .clips
                .iter()
                .filter(|c| c.speaker_id == p.speaker_id && c.partition == partition)
            {
                let clip = match &c.source {
                    ClipSource::Synth { seed, duration_s } => synth_utterance_at(p, *duration_s, *seed, sample_rate)?,
                    ClipSource::Wav { path } => {
                        let full = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                        load_wav_resampled(full, sample_rate)?
                    }
                };
                clips.push(Arc::new(clip));
            }
            out.push(UtterancePool::new(p.speaker_id.clone(), partition, clips)?);
        }
        Ok(out)
    }

    /// Keeps only the first `n` train clips of every speaker.
    pub fn with_train_limit(&self, n: usize) -> Self {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        let clips = self
            .clips
            .iter()
            .filter(|c| {
                if c.partition != Partition::Train {
                    return true;
                }
                let k = seen.entry(c.speaker_id.as_str()).or_default();
                *k += 1;
                *k <= n
            })
            .cloned()
            .collect();
        Self {
            profiles: self.profiles.clone(),
            clips,
        }
    }
}

fn kv<'a>(field: &'a str, key: &str, lineno: usize) -> Result<&'a str> {
    field
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| Error::format(key, format!("line {lineno}: expected `{key}=...`, found `{field}`")))
}

fn num<T: FromStr>(s: &str, key: &str, lineno: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::format(key, format!("line {lineno}: cannot parse `{s}`")))
}

fn parse_profile(fields: &[&str], lineno: usize) -> Result<SpeakerProfile> {
    if fields.len() != 6 {
        return Err(Error::format("profile", format!("line {lineno}: expected 6 fields, found {}", fields.len())));
    }
    let gains = kv(fields[5], "gains", lineno)?
        .split(',')
        .map(|g| num(g, "gains", lineno))
        .collect::<Result<Vec<f64>>>()?;
    let profile = SpeakerProfile {
        speaker_id: fields[1].to_string(),
        f0: num(kv(fields[2], "f0", lineno)?, "f0", lineno)?,
        am_rate: num(kv(fields[3], "am_rate", lineno)?, "am_rate", lineno)?,
        jitter_pct: num(kv(fields[4], "jitter_pct", lineno)?, "jitter_pct", lineno)?,
        harmonic_gains: gains,
    };
    profile.validate()?;
    Ok(profile)
}

fn parse_clip(fields: &[&str], lineno: usize) -> Result<ManifestClip> {
    if fields.len() < 5 {
        return Err(Error::format("clip", format!("line {lineno}: too few fields")));
    }
    let partition = Partition::from_str(fields[2]).map_err(|e| Error::format("partition", e.to_string()))?;
    let source = match (fields[3], fields.len()) {
        ("synth", 6) => ClipSource::Synth {
            seed: num(kv(fields[4], "seed", lineno)?, "seed", lineno)?,
            duration_s: num(kv(fields[5], "duration", lineno)?, "duration", lineno)?,
        },
        ("wav", 5) => ClipSource::Wav {
            path: PathBuf::from(kv(fields[4], "path", lineno)?),
        },
        (kind, _) => {
            return Err(Error::format("source", format!("line {lineno}: malformed `{kind}` clip record")))
        }
    };
    Ok(ManifestClip {
        speaker_id: fields[1].to_string(),
        partition,
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{build_pools, default_profiles, save_wav, synth_utterance, WavEncoding};

    #[test]
    fn render_parse_round_trip() {
        let m = Manifest::synthetic(&default_profiles(), 3, 2, 17).unwrap();
        assert_eq!(m.clips.len(), 15);
        assert_eq!(Manifest::parse(&m.render()).unwrap(), m);
        assert_eq!(m.render(), Manifest::synthetic(&default_profiles(), 3, 2, 17).unwrap().render());
    }

    #[test]
    fn synthetic_manifest_matches_direct_build() {
        let profiles = default_profiles();
        let m = Manifest::synthetic(&profiles[..1], 2, 2, 4).unwrap();
        let pools = m.build_pools(48_000, Path::new(".")).unwrap();
        let (train, test) = build_pools(&profiles[0], 2, 2, speaker_seed(4, &profiles[0].speaker_id)).unwrap();
        assert_eq!(pools[0].0.clips()[1].samples(), train.clips()[1].samples());
        assert_eq!(pools[0].1.clips()[0].samples(), test.clips()[0].samples());
    }

    #[test]
    fn train_limit_keeps_prefix_and_all_test_clips() {
        let profiles = default_profiles();
        let m = Manifest::synthetic(&profiles[..2], 4, 2, 9).unwrap();
        let limited = m.with_train_limit(1);
        assert_eq!(limited.clips.len(), 2 * (1 + 2));
        let full = m.build_partition(Partition::Train, 48_000, Path::new(".")).unwrap();
        let one = limited.build_partition(Partition::Train, 48_000, Path::new(".")).unwrap();
        assert_eq!(one[1].len(), 1);
        assert_eq!(one[1].clips()[0].samples(), full[1].clips()[0].samples());
        let test = limited.build_partition(Partition::Test, 48_000, Path::new(".")).unwrap();
        assert_eq!(test[0].len(), 2);
    }

    #[test]
    fn wav_entries_resolve_relative_to_base() {
        let dir = tempfile::tempdir().unwrap();
        let p = default_profiles()[0].clone();
        let clip = synth_utterance(&p, 1.0, 1).unwrap();
        save_wav(&clip, dir.path().join("a.wav"), WavEncoding::Float32).unwrap();
        let m = Manifest {
            profiles: vec![p.clone()],
            clips: [Partition::Train, Partition::Test]
                .into_iter()
                .map(|partition| ManifestClip {
                    speaker_id: p.speaker_id.clone(),
                    partition,
                    source: ClipSource::Wav { path: "a.wav".into() },
                })
                .collect(),
        };
        let pools = Manifest::parse(&m.render()).unwrap().build_pools(48_000, dir.path()).unwrap();
        assert_eq!(pools[0].0.clips()[0].samples(), clip.samples());
    }

    #[test]
    fn malformed_manifests_name_the_field() {
        let cases = [
            ("profile\tx\tf0=1\tam_rate=0\tjitter_pct=0\tgains=1\n", "header"),
            (
                "# audionav pool manifest v1\nprofile\tx\tf0=abc\tam_rate=0\tjitter_pct=0\tgains=1\n",
                "f0",
            ),
            ("# audionav pool manifest v1\nclip\ty\ttrain\tsynth\tseed=1\tduration=1\n", "speaker_id"),
            (
                "# audionav pool manifest v1\nprofile\tx\tf0=100\tam_rate=0\tjitter_pct=0\tgains=1\nclip\tx\tdev\tsynth\tseed=1\tduration=1\n",
                "partition",
            ),
        ];
        for (text, field) in cases {
            match Manifest::parse(text) {
                Err(Error::Format { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::audio::DEFAULT_SAMPLE_RATE;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomConfig {
    /// Room extent along x, meters.
    pub width: f64,
    /// Room extent along y, meters. The agent spawns on `y = 0`.
    pub height: f64,
    /// Distance at which the linear roll-off reaches zero gain.
    pub d_max: f64,
    /// Reaching a speaker means coming within this distance of its center.
    pub contact_radius: f64,
    /// Agent speed in m/s at unit action magnitude per axis.
    pub agent_speed: f64,
    pub sample_rate: u32,
    /// Samples rendered per agent step.
    pub hop: usize,
    pub obs_len_per_channel: usize,
    pub max_steps: usize,
    pub n_speakers: usize,
    pub target_index: usize,
}

impl Default for RoomConfig {
    fn default() -> Self {
        Self {
            width: 10.0,
            height: 10.0,
            d_max: 15.0,
            contact_radius: 0.5,
            agent_speed: 10.0,
            sample_rate: DEFAULT_SAMPLE_RATE,
            hop: 1024,
            obs_len_per_channel: 1024,
            max_steps: 1000,
            n_speakers: 3,
            target_index: 0,
        }
    }
}

impl RoomConfig {
    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    /// Seconds of audio per agent step.
    pub fn step_duration(&self) -> f64 {
        self.hop as f64 / f64::from(self.sample_rate)
    }

    pub fn obs_len(&self) -> usize {
        2 * self.obs_len_per_channel
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("width", self.width),
            ("height", self.height),
            ("d_max", self.d_max),
            ("contact_radius", self.contact_radius),
            ("agent_speed", self.agent_speed),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("room.{key} must be positive, got {v}")));
            }
        }
        let counts = [
            ("sample_rate", self.sample_rate as usize),
            ("hop", self.hop),
            ("obs_len_per_channel", self.obs_len_per_channel),
            ("max_steps", self.max_steps),
            ("n_speakers", self.n_speakers),
        ];
        for (key, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("room.{key} must be positive")));
            }
        }
        if self.d_max < self.diagonal() {
            return Err(Error::Config(format!(
                "room.d_max = {} is shorter than the room diagonal {:.3}; some sources would be inaudible",
                self.d_max,
                self.diagonal()
            )));
        }
        if self.hop > self.obs_len_per_channel {
            return Err(Error::Config(format!(
                "room.hop = {} exceeds room.obs_len_per_channel = {}",
                self.hop, self.obs_len_per_channel
            )));
        }
        if self.target_index >= self.n_speakers {
            return Err(Error::Config(format!(
                "room.target_index = {} is not below room.n_speakers = {}",
                self.target_index, self.n_speakers
            )));
        }
        Ok(())
    }
}

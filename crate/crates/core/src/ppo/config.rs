use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    /// Discount factor.
    pub gamma: f64,
    /// Value-loss coefficient.
    pub c1: f64,
    /// Entropy-bonus coefficient.
    pub c2: f64,
    /// Probability-ratio clip range.
    pub epsilon: f64,
    /// Steps collected per environment between updates.
    pub horizon: usize,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub lr: f64,
    /// Environment steps to consume, summed over environments.
    pub total_steps: usize,
    pub n_envs: usize,
    /// Standardize advantages over each rollout before the update.
    pub normalize_advantages: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            c1: 0.95,
            c2: 0.001,
            epsilon: 0.2,
            horizon: 2048,
            epochs_per_update: 4,
            minibatch_size: 512,
            lr: 3e-4,
            total_steps: 300_000,
            n_envs: 4,
            normalize_advantages: true,
        }
    }
}

impl PpoConfig {
    /// Full-length schedule: six million environment steps.
    pub fn paper() -> Self {
        Self {
            total_steps: 6_000_000,
            ..Self::default()
        }
    }

    /// CPU-sized schedule, about ten minutes of single-core training.
    pub fn desk() -> Self {
        Self {
            total_steps: 600_000,
            ..Self::default()
        }
    }

    pub fn steps_per_update(&self) -> usize {
        self.horizon * self.n_envs
    }

    /// Rollout/update iterations needed to consume at least `total_steps`.
    pub fn n_updates(&self) -> usize {
        self.total_steps.div_ceil(self.steps_per_update())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("ppo.gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config(format!("ppo.epsilon must be positive, got {}", self.epsilon)));
        }
        for (key, v) in [("c1", self.c1), ("c2", self.c2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("ppo.{key} must be non-negative, got {v}")));
            }
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("ppo.lr must be positive, got {}", self.lr)));
        }
        for (key, v) in [
            ("horizon", self.horizon),
            ("epochs_per_update", self.epochs_per_update),
            ("minibatch_size", self.minibatch_size),
            ("total_steps", self.total_steps),
            ("n_envs", self.n_envs),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("ppo.{key} must be positive")));
            }
        }
        if self.minibatch_size > self.steps_per_update() {
            return Err(Error::Config(format!(
                "ppo.minibatch_size = {} exceeds horizon x n_envs = {}",
                self.minibatch_size,
                self.steps_per_update()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_coefficients() {
        let p = PpoConfig::paper();
        assert_eq!((p.gamma, p.c1, p.c2, p.epsilon), (0.99, 0.95, 0.001, 0.2));
        assert_eq!(p.total_steps, 6_000_000);
        p.validate().unwrap();
    }

    #[test]
    fn update_count_arithmetic() {
        let c = PpoConfig {
            horizon: 128,
            n_envs: 4,
            minibatch_size: 64,
            total_steps: 512,
            ..PpoConfig::default()
        };
        assert_eq!(c.n_updates(), 1);
        assert_eq!(PpoConfig { total_steps: 5120, ..c.clone() }.n_updates(), 10);
        assert_eq!(PpoConfig { total_steps: 513, ..c }.n_updates(), 2);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let base = PpoConfig::default();
        for bad in [
            PpoConfig { gamma: 0.0, ..base.clone() },
            PpoConfig { gamma: 1.01, ..base.clone() },
            PpoConfig { epsilon: 0.0, ..base.clone() },
            PpoConfig { minibatch_size: 10_000, ..base.clone() },
            PpoConfig { n_envs: 0, ..base.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
        }
    }
}

//! Proximal policy optimization: rollouts, discounted TD-residual
//! advantages, the clipped surrogate loss and minibatch Adam updates.

mod advantage;
mod buffer;
mod config;
mod loss;
mod train;
mod update;

pub use advantage::{compute_advantages, compute_deltas, normalize_advantages, value_targets};
pub use buffer::{collect_rollout, EnvWorker, EpisodeSummary, RolloutBuffer};
pub use config::PpoConfig;
pub use loss::{clipped_objective, ppo_gradients, ppo_loss, total_loss, LossBreakdown, Minibatch};
pub use train::{train, TrainProgress, TrainStats, Trainer};
pub use update::{update, UpdateStats};

//! Audio-only navigation toward a target speaker.
//!
//! The crate bundles everything needed to train and evaluate an agent that
//! moves through a 2D room using nothing but a stereo raw-audio stream:
//!
//! - [`audio`]: synthetic speaker voices, utterance pools, WAV I/O and pitch shifting.
//! - [`room`]: the room simulator with stereo rendering, rewards and episode termination.
//! - [`nn`]: the MLP policy/value network with manual backpropagation and Adam.
//! - [`ppo`]: rollout collection, advantage estimation and the clipped PPO update.
//! - [`eval`]: success-rate evaluation, random baseline, pitch-shift and few-shot experiments.

pub mod audio;
pub mod error;
pub mod eval;
pub mod nn;
pub mod ppo;
pub mod room;
pub mod seed;

pub use error::{Error, Result};

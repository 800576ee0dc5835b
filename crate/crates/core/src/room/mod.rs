//! The navigation task: a rectangular room with stationary speakers, an agent
//! that sets its planar velocity each step, and a stereo renderer producing
//! the raw-audio observation.

mod config;
mod env;
mod render;
mod trajectory;

pub use config::RoomConfig;
pub use env::{
    make_observation, EnvFactory, EnvState, Layout, Observation, Outcome, PitchShiftRange, SpeakerState,
    StepResult, UtteranceDrawer, STEP_PENALTY,
};
pub use render::{attenuation, mix_block, pan_gains, soft_clip};
pub use trajectory::{TrajectoryRecord, TrajectoryWriter};

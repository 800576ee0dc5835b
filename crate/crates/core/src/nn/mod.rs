//! Two-hidden-layer MLP with a tanh Gaussian policy head and a scalar value
//! head, trained with hand-written backpropagation and Adam.

mod adam;
mod checkpoint;
mod gaussian;
mod mlp;
mod params;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use checkpoint::{load_adam, load_params, load_params_expecting, save_adam, save_params, CHECKPOINT_VERSION};
pub use gaussian::{entropy, log_prob, sample_action, LOG_2PI};
pub use mlp::{backward, forward, ForwardCache, ForwardOutput, Upstream};
pub use params::{MlpParams, MlpShape, PARAM_NAMES};

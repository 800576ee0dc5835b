use super::params::MlpParams;
use crate::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: MlpParams,
    pub v: MlpParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &MlpParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. Non-finite gradients abort the step
/// before anything is modified.
pub fn adam_step(params: &mut MlpParams, grads: &MlpParams, state: &mut AdamState, lr: f64) -> Result<()> {
    if params.shape() != grads.shape() || params.shape() != state.m.shape() {
        return Err(Error::Shape("parameter, gradient and optimizer shapes differ".into()));
    }
    for (name, g) in grads.groups() {
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::training(name, format!("non-finite gradient {} at index {i}", g[i])));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    let grads = grads.groups();
    let ms = state.m.groups_mut();
    let vs = state.v.groups_mut();
    for ((((_, p), (_, g)), (_, m)), (_, v)) in params.groups_mut().into_iter().zip(grads).zip(ms).zip(vs) {
        for i in 0..p.len() {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
    Ok(())
}

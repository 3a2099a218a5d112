//! Parameter updates.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::model::{to_f32_grid, Gradients, ModelParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimError {
    #[error("{grads} gradients for {params} parameters")]
    ShapeMismatch { params: usize, grads: usize },
    #[error("parameter {index} became non-finite")]
    NonFinite { index: usize },
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "lowercase"))]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { kind: OptimizerKind::Adam, learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(OptimError::InvalidConfig("learning_rate must be > 0"));
        }
        if self.kind == OptimizerKind::Adam {
            if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
                return Err(OptimError::InvalidConfig("betas must lie in [0, 1)"));
            }
            if self.epsilon.is_nan() || self.epsilon <= 0.0 {
                return Err(OptimError::InvalidConfig("adam epsilon must be > 0"));
            }
        }
        Ok(())
    }
}

/// Step count and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(len: usize) -> Self {
        OptimizerState { step: 0, m: vec![0.0; len], v: vec![0.0; len] }
    }
}

/// One update of a raw `f64` vector: `θ -= lr·g` for SGD, bias-corrected
/// Adam otherwise.
pub fn apply_update(theta: &mut [f64], grads: &[f64], state: &mut OptimizerState, cfg: &OptimizerConfig) -> Result<(), OptimError> {
    if theta.len() != grads.len() || state.m.len() != theta.len() || state.v.len() != theta.len() {
        return Err(OptimError::ShapeMismatch { params: theta.len(), grads: grads.len() });
    }
    state.step += 1;
    match cfg.kind {
        OptimizerKind::Sgd => {
            for (t, g) in theta.iter_mut().zip(grads) {
                *t -= cfg.learning_rate * g;
            }
        }
        OptimizerKind::Adam => {
            let t = state.step as f64;
            let c1 = 1.0 - libm::pow(cfg.beta1, t);
            let c2 = 1.0 - libm::pow(cfg.beta2, t);
            for i in 0..theta.len() {
                let g = grads[i];
                state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
                state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
                let m_hat = state.m[i] / c1;
                let v_hat = state.v[i] / c2;
                theta[i] -= cfg.learning_rate * m_hat / (libm::sqrt(v_hat) + cfg.epsilon);
            }
        }
    }
    if let Some(index) = theta.iter().position(|x| !x.is_finite()) {
        return Err(OptimError::NonFinite { index });
    }
    Ok(())
}

/// Updates model parameters and rounds them back onto the `f32` grid.
pub fn optimizer_step(params: &mut ModelParams, grads: &Gradients, state: &mut OptimizerState, cfg: &OptimizerConfig) -> Result<(), OptimError> {
    let theta = params.as_mut_slice();
    apply_update(theta, grads.as_slice(), state, cfg)?;
    for x in theta.iter_mut() {
        *x = to_f32_grid(*x);
    }
    if let Some(index) = theta.iter().position(|x| !x.is_finite()) {
        return Err(OptimError::NonFinite { index });
    }
    Ok(())
}

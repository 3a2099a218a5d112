//! Composite pairwise objective: cross-entropy on the two arm scores plus a
//! margin hinge between them.
//!
//! ```text
//! L(yp, yn) = -λ1·(ln yp + ln(1 - yn)) + λ2·max(0, m - yp + yn)
//! ```
//!
//! The logs see `yp` and `yn` clamped to `[ε, 1-ε]`; the hinge sees them raw.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObjectiveError {
    #[error("invalid loss config: {0}")]
    InvalidConfig(&'static str),
    #[error("{pos} positive scores but {neg} negative scores")]
    LengthMismatch { pos: usize, neg: usize },
    #[error("empty batch")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct LossConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub margin: f64,
    pub epsilon: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { lambda1: 0.5, lambda2: 0.5, margin: 0.2, epsilon: 1e-7 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return Err(ObjectiveError::InvalidConfig("lambda1 and lambda2 must be >= 0"));
        }
        if self.lambda1 + self.lambda2 <= 0.0 {
            return Err(ObjectiveError::InvalidConfig("lambda1 + lambda2 must be > 0"));
        }
        if !(self.margin > 0.0 && self.margin < 1.0) {
            return Err(ObjectiveError::InvalidConfig("margin must lie in (0, 1)"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1e-3) {
            return Err(ObjectiveError::InvalidConfig("epsilon must lie in (0, 1e-3)"));
        }
        Ok(())
    }

    fn clamp(&self, y: f64) -> f64 {
        y.clamp(self.epsilon, 1.0 - self.epsilon)
    }
}

pub fn pairwise_loss(yp: f64, yn: f64, config: &LossConfig) -> f64 {
    let ce = -(libm::log(config.clamp(yp)) + libm::log(1.0 - config.clamp(yn)));
    let hinge = (config.margin - yp + yn).max(0.0);
    config.lambda1 * ce + config.lambda2 * hinge
}

/// `(∂L/∂yp, ∂L/∂yn)`. The hinge contributes only when `m - yp + yn > 0`
/// (subgradient 0 at the kink); the log terms use the clamped scores.
pub fn pairwise_loss_grad(yp: f64, yn: f64, config: &LossConfig) -> (f64, f64) {
    let active = config.margin - yp + yn > 0.0;
    let h = if active { config.lambda2 } else { 0.0 };
    let dp = -config.lambda1 / config.clamp(yp) - h;
    let dn = config.lambda1 / (1.0 - config.clamp(yn)) + h;
    (dp, dn)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    pub mean: f64,
    /// Per-pair gradients of the mean, already scaled by 1/N.
    pub d_pos: Vec<f64>,
    pub d_neg: Vec<f64>,
}

/// Mean loss over aligned (positive, negative) score lists.
pub fn batch_loss(yps: &[f64], yns: &[f64], config: &LossConfig) -> Result<BatchLoss, ObjectiveError> {
    if yps.len() != yns.len() {
        return Err(ObjectiveError::LengthMismatch { pos: yps.len(), neg: yns.len() });
    }
    if yps.is_empty() {
        return Err(ObjectiveError::Empty);
    }
    let n = yps.len() as f64;
    let mut total = 0.0;
    let mut d_pos = Vec::with_capacity(yps.len());
    let mut d_neg = Vec::with_capacity(yps.len());
    for (&p, &q) in yps.iter().zip(yns) {
        total += pairwise_loss(p, q, config);
        let (dp, dn) = pairwise_loss_grad(p, q, config);
        d_pos.push(dp / n);
        d_neg.push(dn / n);
    }
    Ok(BatchLoss { mean: total / n, d_pos, d_neg })
}

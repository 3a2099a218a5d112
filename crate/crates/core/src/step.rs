//! One training step over a batch of triples: both arms through the shared
//! encoder, the pairwise loss, and the gradient of the mean loss.

use alloc::vec::Vec;

use crate::model::{backward, forward, Gradients, ModelError, ModelParams};
use crate::objective::{batch_loss, LossConfig, ObjectiveError};
use crate::textenc::EncodedPair;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("loss is not finite ({0})")]
    NonFiniteLoss(f64),
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub loss: f64,
    pub pos_scores: Vec<f64>,
    pub neg_scores: Vec<f64>,
    pub grads: Gradients,
}

/// Runs `[positives..., negatives...]` as one fused batch of `2B` pairs so
/// both arms read the same parameters; arm gradients are accumulated into a
/// single [`Gradients`] before any update.
pub fn pairwise_step(
    params: &ModelParams,
    positives: &[EncodedPair],
    negatives: &[EncodedPair],
    loss: &LossConfig,
    train_mode: bool,
    dropout_seed: u64,
) -> Result<StepOutput, StepError> {
    if positives.len() != negatives.len() {
        return Err(ObjectiveError::LengthMismatch { pos: positives.len(), neg: negatives.len() }.into());
    }
    let fused: Vec<EncodedPair> = positives.iter().chain(negatives).cloned().collect();
    let (scores, cache) = forward(params, &fused, train_mode, dropout_seed)?;
    let (pos_scores, neg_scores) = scores.split_at(positives.len());
    let b = batch_loss(pos_scores, neg_scores, loss)?;
    if !b.mean.is_finite() {
        return Err(StepError::NonFiniteLoss(b.mean));
    }
    let score_grads: Vec<f64> = b.d_pos.iter().chain(&b.d_neg).copied().collect();
    let grads = backward(params, &cache, &score_grads)?;
    Ok(StepOutput { loss: b.mean, pos_scores: pos_scores.to_vec(), neg_scores: neg_scores.to_vec(), grads })
}

//! Small post-LN transformer encoder with a `[CLS]` sigmoid scoring head.
//!
//! All learnable values live in one flat `f64` vector. The ordering is fixed
//! and is what checkpoints store:
//!
//! 1. token embeddings `V×H`, position embeddings `max_len×H`, segment
//!    embeddings `2×H` (all row-major, one row per id);
//! 2. for each layer: `Wq bq Wk bk Wv bv Wo bo ln1.gain ln1.bias W1 b1 W2 b2
//!    ln2.gain ln2.bias`, where a projection `W` is stored `in×out` row-major
//!    and applied as `x·W + b`;
//! 3. the head weight `w` (`H`) and bias `b` (1).
//!
//! Parameters are kept on the `f32` grid (initialisation and every optimizer
//! step round to the nearest `f32`) while all arithmetic runs in `f64`, so a
//! checkpoint of 32-bit floats restores them bit for bit.

mod backward;
mod forward;
mod linalg;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::textenc::{encode_pair_with, EncodeError, TruncationPolicy, Vocab};

pub use backward::{backward, backward_sequence};
pub use forward::{forward, forward_sequence, Cache, LayerCache, SeqCache};

pub const LAYER_NORM_EPS: f64 = 1e-12;
pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("pair {index} has length {found}, model expects max_len {expected}")]
    LengthMismatch { index: usize, expected: usize, found: usize },
    #[error("pair {index}: malformed pair ({reason})")]
    MalformedPair { index: usize, reason: &'static str },
    #[error("pair {index}: token id {id} outside vocabulary of {vocab_size}")]
    TokenOutOfRange { index: usize, id: u32, vocab_size: usize },
    #[error("cache was produced by different parameters")]
    StaleCache,
    #[error("{found} score gradients for a batch of {expected}")]
    GradientCount { expected: usize, found: usize },
    #[error("vocabulary has {vocab} tokens but the model was built for {model}")]
    VocabMismatch { vocab: usize, model: usize },
    #[error("parameter vector has {found} values, layout needs {expected}")]
    ParamCount { expected: usize, found: usize },
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub ffn_size: usize,
    pub max_len: usize,
    pub dropout_rate: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    /// The desk-scale encoder. `vocab_size` is left at 0 to be filled in
    /// from the training vocabulary.
    fn default() -> Self {
        ModelConfig {
            vocab_size: 0,
            hidden_size: 64,
            num_layers: 2,
            num_heads: 4,
            ffn_size: 256,
            max_len: 128,
            dropout_rate: 0.1,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        if self.vocab_size < crate::textenc::RESERVED.len() {
            return bad(format!("vocab_size {} is below the 4 reserved tokens", self.vocab_size));
        }
        if self.hidden_size == 0 || self.num_layers == 0 || self.num_heads == 0 || self.max_len == 0 {
            return bad("sizes must be at least 1".into());
        }
        if !self.hidden_size.is_multiple_of(self.num_heads) {
            return bad(format!(
                "hidden_size {} not divisible by num_heads {}",
                self.hidden_size, self.num_heads
            ));
        }
        if self.ffn_size < self.hidden_size {
            return bad(format!("ffn_size {} < hidden_size {}", self.ffn_size, self.hidden_size));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate {} outside [0, 1)", self.dropout_rate));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_size / self.num_heads
    }
}

/// Which part of the network a tensor belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TensorClass {
    Embedding,
    Attention,
    FeedForward,
    LayerNorm,
    Head,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Normal,
    Zeros,
    Ones,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub class: TensorClass,
    pub init: Init,
    pub offset: usize,
    pub len: usize,
}

impl TensorSpec {
    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerOffsets {
    pub wq: usize,
    pub bq: usize,
    pub wk: usize,
    pub bk: usize,
    pub wv: usize,
    pub bv: usize,
    pub wo: usize,
    pub bo: usize,
    pub ln1_gain: usize,
    pub ln1_bias: usize,
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
    pub ln2_gain: usize,
    pub ln2_bias: usize,
}

/// Offsets of every tensor in the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub token_emb: usize,
    pub pos_emb: usize,
    pub seg_emb: usize,
    pub layers: Vec<LayerOffsets>,
    pub head_w: usize,
    pub head_b: usize,
    pub total: usize,
    pub tensors: Vec<TensorSpec>,
}

impl Layout {
    pub fn new(c: &ModelConfig) -> Self {
        let (h, f) = (c.hidden_size, c.ffn_size);
        let mut tensors = Vec::new();
        let mut at = 0usize;
        let mut add = |name: String, class, init, len: usize| {
            let offset = at;
            tensors.push(TensorSpec { name, class, init, offset, len });
            at += len;
            offset
        };
        use Init::*;
        use TensorClass::*;
        let token_emb = add("embeddings.token".into(), Embedding, Normal, c.vocab_size * h);
        let pos_emb = add("embeddings.position".into(), Embedding, Normal, c.max_len * h);
        let seg_emb = add("embeddings.segment".into(), Embedding, Normal, 2 * h);
        let mut layers = Vec::with_capacity(c.num_layers);
        for l in 0..c.num_layers {
            let n = |s: &str| format!("layer{l}.{s}");
            layers.push(LayerOffsets {
                wq: add(n("attn.wq"), Attention, Normal, h * h),
                bq: add(n("attn.bq"), Attention, Zeros, h),
                wk: add(n("attn.wk"), Attention, Normal, h * h),
                bk: add(n("attn.bk"), Attention, Zeros, h),
                wv: add(n("attn.wv"), Attention, Normal, h * h),
                bv: add(n("attn.bv"), Attention, Zeros, h),
                wo: add(n("attn.wo"), Attention, Normal, h * h),
                bo: add(n("attn.bo"), Attention, Zeros, h),
                ln1_gain: add(n("ln1.gain"), LayerNorm, Ones, h),
                ln1_bias: add(n("ln1.bias"), LayerNorm, Zeros, h),
                w1: add(n("ffn.w1"), FeedForward, Normal, h * f),
                b1: add(n("ffn.b1"), FeedForward, Zeros, f),
                w2: add(n("ffn.w2"), FeedForward, Normal, f * h),
                b2: add(n("ffn.b2"), FeedForward, Zeros, h),
                ln2_gain: add(n("ln2.gain"), LayerNorm, Ones, h),
                ln2_bias: add(n("ln2.bias"), LayerNorm, Zeros, h),
            });
        }
        let head_w = add("head.w".into(), Head, Normal, h);
        let head_b = add("head.b".into(), Head, Zeros, 1);
        Layout { token_emb, pos_emb, seg_emb, layers, head_w, head_b, total: at, tensors }
    }

    /// The tensor containing flat index `i`.
    pub fn tensor_of(&self, i: usize) -> Option<&TensorSpec> {
        let k = self.tensors.partition_point(|t| t.offset + t.len <= i);
        self.tensors.get(k).filter(|t| t.range().contains(&i))
    }
}

#[inline]
pub(crate) fn to_f32_grid(x: f64) -> f64 {
    x as f32 as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    config: ModelConfig,
    layout: Layout,
    data: Vec<f64>,
}

impl ModelParams {
    /// Fresh parameters: `Normal` tensors from a ±2σ truncated normal with
    /// σ = 0.02, drawn in layout order from `Rng::new(config.seed)`;
    /// layer-norm gains 1; every bias 0.
    pub fn init(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = Layout::new(config);
        let mut data = vec![0.0; layout.total];
        let mut rng = Rng::new(config.seed);
        for t in &layout.tensors {
            let slot = &mut data[t.range()];
            match t.init {
                Init::Normal => slot
                    .iter_mut()
                    .for_each(|x| *x = to_f32_grid(rng.truncated_normal(INIT_STD))),
                Init::Zeros => slot.fill(0.0),
                Init::Ones => slot.fill(1.0),
            }
        }
        Ok(ModelParams { config: config.clone(), layout, data })
    }

    /// Wraps an existing flat vector, e.g. one read from a checkpoint.
    pub fn from_flat(config: &ModelConfig, data: Vec<f64>) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = Layout::new(config);
        if data.len() != layout.total {
            return Err(ModelError::ParamCount { expected: layout.total, found: data.len() });
        }
        Ok(ModelParams { config: config.clone(), layout, data })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.layout.tensors.iter().find(|t| t.name == name).map(|t| &self.data[t.range()])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// FNV-1a over the raw bits; used to tie a [`Cache`] to the parameters
    /// that produced it.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for x in &self.data {
            h ^= x.to_bits();
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }

    pub fn check_vocab(&self, vocab: &Vocab) -> Result<(), ModelError> {
        if vocab.len() != self.config.vocab_size {
            return Err(ModelError::VocabMismatch { vocab: vocab.len(), model: self.config.vocab_size });
        }
        Ok(())
    }
}

/// Gradient of a scalar with respect to every parameter, in the same flat layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    data: Vec<f64>,
}

impl Gradients {
    pub fn zeros(len: usize) -> Self {
        Gradients { data: vec![0.0; len] }
    }

    pub fn zeros_like(params: &ModelParams) -> Self {
        Gradients::zeros(params.len())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Scores one (question, answer) pair in eval mode.
pub fn score_pair(
    params: &ModelParams,
    vocab: &Vocab,
    question: &str,
    answer: &str,
) -> Result<f64, ModelError> {
    score_pair_with(params, vocab, question, answer, TruncationPolicy::AnswerFirst)
}

pub fn score_pair_with(
    params: &ModelParams,
    vocab: &Vocab,
    question: &str,
    answer: &str,
    policy: TruncationPolicy,
) -> Result<f64, ModelError> {
    params.check_vocab(vocab)?;
    let pair = encode_pair_with(vocab, question, answer, params.config.max_len, policy)?;
    let (scores, _) = forward(params, core::slice::from_ref(&pair), false, 0)?;
    Ok(scores[0])
}

#[cfg(test)]
mod tests;

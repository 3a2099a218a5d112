use alloc::vec;
use alloc::vec::Vec;

use super::linalg::{gelu, layer_norm, matmul_bias, sigmoid};
use super::{ModelError, ModelParams};
use crate::rng::Rng;
use crate::textenc::EncodedPair;

/// Activations of one encoder block, kept for the backward pass.
/// Matrices are row-major over the `n` active positions.
#[derive(Debug, Clone)]
pub struct LayerCache {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub k: Vec<f64>,
    pub v: Vec<f64>,
    /// Softmax output per head, `heads×n×n`, before dropout.
    pub probs: Vec<f64>,
    /// Dropout multipliers on `probs` (0 or 1/(1-p)); `None` when no dropout ran.
    pub attn_drop: Option<Vec<f64>>,
    pub ctx: Vec<f64>,
    pub xhat1: Vec<f64>,
    pub inv_std1: Vec<f64>,
    pub h1: Vec<f64>,
    pub f_pre: Vec<f64>,
    /// GELU output after dropout, the actual input of the second FFN projection.
    pub f_act: Vec<f64>,
    pub ffn_drop: Option<Vec<f64>>,
    pub xhat2: Vec<f64>,
    pub inv_std2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SeqCache {
    /// Active (non-PAD) length.
    pub n: usize,
    pub tokens: Vec<u32>,
    pub segments: Vec<u8>,
    pub layers: Vec<LayerCache>,
    /// Final hidden states, `n×H`.
    pub hidden: Vec<f64>,
    pub logit: f64,
    pub score: f64,
}

/// Everything [`super::backward`] needs from a batched forward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    pub(crate) fingerprint: u64,
    pub seqs: Vec<SeqCache>,
}

impl Cache {
    pub fn batch_size(&self) -> usize {
        self.seqs.len()
    }
}

/// Per-pair dropout seed inside a batch.
pub fn sequence_seed(dropout_seed: u64, index: usize) -> u64 {
    dropout_seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub(crate) fn validate_pair(params: &ModelParams, index: usize, pair: &EncodedPair) -> Result<usize, ModelError> {
    let c = params.config();
    let len = pair.token_ids.len();
    if len != c.max_len || pair.segment_ids.len() != len || pair.attention_mask.len() != len {
        let found = if len != c.max_len { len } else { pair.segment_ids.len().max(pair.attention_mask.len()) };
        return Err(ModelError::LengthMismatch { index, expected: c.max_len, found });
    }
    let n = pair.active_len();
    if n == 0 {
        return Err(ModelError::MalformedPair { index, reason: "no active positions" });
    }
    if pair.attention_mask[n..].iter().any(|&m| m != 0) {
        return Err(ModelError::MalformedPair { index, reason: "attention mask is not a prefix of ones" });
    }
    if pair.segment_ids[..n].iter().any(|&s| s > 1) {
        return Err(ModelError::MalformedPair { index, reason: "segment id other than 0/1" });
    }
    if let Some(&id) = pair.token_ids[..n].iter().find(|&&id| id as usize >= c.vocab_size) {
        return Err(ModelError::TokenOutOfRange { index, id, vocab_size: c.vocab_size });
    }
    Ok(n)
}

fn dropout_mask(rng: &mut Rng, len: usize, rate: f64) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..len).map(|_| if rng.bernoulli(rate) { 0.0 } else { keep }).collect()
}

/// Runs one pair through the encoder.
///
/// Only the `n` active positions are computed. PAD keys would receive
/// weight exp(-inf) = 0 in every softmax and PAD queries never feed back into
/// active positions, so this is the masked computation without the dead rows.
/// Passing a generator enables dropout (training mode).
pub fn forward_sequence(
    params: &ModelParams,
    pair: &EncodedPair,
    dropout: Option<&mut Rng>,
) -> Result<SeqCache, ModelError> {
    let n = validate_pair(params, 0, pair)?;
    Ok(forward_active(params, pair, n, dropout))
}

pub(crate) fn forward_active(params: &ModelParams, pair: &EncodedPair, n: usize, mut dropout: Option<&mut Rng>) -> SeqCache {
    let c = params.config();
    let lay = params.layout();
    let p = params.as_slice();
    let (h, f, heads, hd) = (c.hidden_size, c.ffn_size, c.num_heads, c.head_dim());
    let rate = c.dropout_rate;
    let use_dropout = rate > 0.0 && dropout.is_some();
    let scale = 1.0 / libm::sqrt(hd as f64);

    let tokens = pair.token_ids[..n].to_vec();
    let segments = pair.segment_ids[..n].to_vec();

    let mut x = vec![0.0; n * h];
    for t in 0..n {
        let tok = &p[lay.token_emb + tokens[t] as usize * h..][..h];
        let pos = &p[lay.pos_emb + t * h..][..h];
        let seg = &p[lay.seg_emb + segments[t] as usize * h..][..h];
        for j in 0..h {
            x[t * h + j] = tok[j] + pos[j] + seg[j];
        }
    }

    let mut layers = Vec::with_capacity(c.num_layers);
    for lo in &lay.layers {
        let mut q = vec![0.0; n * h];
        let mut k = vec![0.0; n * h];
        let mut v = vec![0.0; n * h];
        matmul_bias(&x, n, h, &p[lo.wq..lo.wq + h * h], h, &p[lo.bq..lo.bq + h], &mut q);
        matmul_bias(&x, n, h, &p[lo.wk..lo.wk + h * h], h, &p[lo.bk..lo.bk + h], &mut k);
        matmul_bias(&x, n, h, &p[lo.wv..lo.wv + h * h], h, &p[lo.bv..lo.bv + h], &mut v);

        let mut probs = vec![0.0; heads * n * n];
        for a in 0..heads {
            for i in 0..n {
                let qi = &q[i * h + a * hd..][..hd];
                let row = &mut probs[(a * n + i) * n..][..n];
                let mut max = f64::NEG_INFINITY;
                for (j, s) in row.iter_mut().enumerate() {
                    let kj = &k[j * h + a * hd..][..hd];
                    *s = super::linalg::dot(qi, kj) * scale;
                    max = max.max(*s);
                }
                let mut sum = 0.0;
                for s in row.iter_mut() {
                    *s = libm::exp(*s - max);
                    sum += *s;
                }
                for s in row.iter_mut() {
                    *s /= sum;
                }
            }
        }
        let attn_drop = if use_dropout {
            Some(dropout_mask(dropout.as_deref_mut().unwrap(), probs.len(), rate))
        } else {
            None
        };

        let mut ctx = vec![0.0; n * h];
        for a in 0..heads {
            for i in 0..n {
                let base = (a * n + i) * n;
                let out = &mut ctx[i * h + a * hd..][..hd];
                for j in 0..n {
                    let mut w = probs[base + j];
                    if let Some(m) = &attn_drop {
                        w *= m[base + j];
                    }
                    if w == 0.0 {
                        continue;
                    }
                    let vj = &v[j * h + a * hd..][..hd];
                    for (o, &vv) in out.iter_mut().zip(vj) {
                        *o += w * vv;
                    }
                }
            }
        }

        let mut r1 = vec![0.0; n * h];
        matmul_bias(&ctx, n, h, &p[lo.wo..lo.wo + h * h], h, &p[lo.bo..lo.bo + h], &mut r1);
        for (r, xv) in r1.iter_mut().zip(&x) {
            *r += xv;
        }
        let mut xhat1 = vec![0.0; n * h];
        let mut inv_std1 = vec![0.0; n];
        let mut h1 = vec![0.0; n * h];
        layer_norm(&r1, h, &p[lo.ln1_gain..lo.ln1_gain + h], &p[lo.ln1_bias..lo.ln1_bias + h], &mut xhat1, &mut inv_std1, &mut h1);

        let mut f_pre = vec![0.0; n * f];
        matmul_bias(&h1, n, h, &p[lo.w1..lo.w1 + h * f], f, &p[lo.b1..lo.b1 + f], &mut f_pre);
        let mut f_act: Vec<f64> = f_pre.iter().map(|&z| gelu(z)).collect();
        let ffn_drop = if use_dropout {
            let m = dropout_mask(dropout.as_deref_mut().unwrap(), f_act.len(), rate);
            for (a, s) in f_act.iter_mut().zip(&m) {
                *a *= s;
            }
            Some(m)
        } else {
            None
        };

        let mut r2 = vec![0.0; n * h];
        matmul_bias(&f_act, n, f, &p[lo.w2..lo.w2 + f * h], h, &p[lo.b2..lo.b2 + h], &mut r2);
        for (r, hv) in r2.iter_mut().zip(&h1) {
            *r += hv;
        }
        let mut xhat2 = vec![0.0; n * h];
        let mut inv_std2 = vec![0.0; n];
        let mut out = vec![0.0; n * h];
        layer_norm(&r2, h, &p[lo.ln2_gain..lo.ln2_gain + h], &p[lo.ln2_bias..lo.ln2_bias + h], &mut xhat2, &mut inv_std2, &mut out);

        layers.push(LayerCache {
            x: core::mem::replace(&mut x, out),
            q,
            k,
            v,
            probs,
            attn_drop,
            ctx,
            xhat1,
            inv_std1,
            h1,
            f_pre,
            f_act,
            ffn_drop,
            xhat2,
            inv_std2,
        });
    }

    let logit = super::linalg::dot(&x[..h], &p[lay.head_w..lay.head_w + h]) + p[lay.head_b];
    SeqCache { n, tokens, segments, layers, hidden: x, logit, score: sigmoid(logit) }
}

/// Scores a batch. In training mode each pair `i` draws its dropout masks
/// from `Rng::new(sequence_seed(dropout_seed, i))`; in eval mode no dropout
/// is applied and `dropout_seed` is ignored.
pub fn forward(
    params: &ModelParams,
    batch: &[EncodedPair],
    train_mode: bool,
    dropout_seed: u64,
) -> Result<(Vec<f64>, Cache), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let lens = batch
        .iter()
        .enumerate()
        .map(|(i, pair)| validate_pair(params, i, pair))
        .collect::<Result<Vec<_>, _>>()?;
    let seqs: Vec<SeqCache> = batch
        .iter()
        .zip(lens)
        .enumerate()
        .map(|(i, (pair, n))| {
            let mut rng = Rng::new(sequence_seed(dropout_seed, i));
            forward_active(params, pair, n, if train_mode { Some(&mut rng) } else { None })
        })
        .collect();
    let scores = seqs.iter().map(|s| s.score).collect();
    Ok((scores, Cache { fingerprint: params.fingerprint(), seqs }))
}

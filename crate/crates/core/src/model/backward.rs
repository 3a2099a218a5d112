use alloc::vec;

use super::forward::SeqCache;
use super::linalg::{accum_dy_wt, accum_rows, accum_xt_dy, dot, gelu_grad, layer_norm_backward};
use super::{Cache, Gradients, ModelError, ModelParams};

/// Gradient of `Σ_i score_grads[i]·score_i` with respect to every parameter.
pub fn backward(params: &ModelParams, cache: &Cache, score_grads: &[f64]) -> Result<Gradients, ModelError> {
    if cache.fingerprint != params.fingerprint() {
        return Err(ModelError::StaleCache);
    }
    if score_grads.len() != cache.seqs.len() {
        return Err(ModelError::GradientCount { expected: cache.seqs.len(), found: score_grads.len() });
    }
    let mut grads = Gradients::zeros_like(params);
    for (seq, &g) in cache.seqs.iter().zip(score_grads) {
        backward_sequence(params, seq, g, grads.as_mut_slice());
    }
    Ok(grads)
}

/// Accumulates `dscore · ∂score/∂θ` for one cached pair into `grads`.
///
/// The caller guarantees `seq` came from `params`; [`backward`] checks this.
pub fn backward_sequence(params: &ModelParams, seq: &SeqCache, dscore: f64, grads: &mut [f64]) {
    if dscore == 0.0 {
        return;
    }
    let c = params.config();
    let lay = params.layout();
    let p = params.as_slice();
    let (h, f, heads, hd) = (c.hidden_size, c.ffn_size, c.num_heads, c.head_dim());
    let n = seq.n;
    let scale = 1.0 / libm::sqrt(hd as f64);

    let dz = dscore * seq.score * (1.0 - seq.score);
    for j in 0..h {
        grads[lay.head_w + j] += dz * seq.hidden[j];
    }
    grads[lay.head_b] += dz;

    let mut dx = vec![0.0; n * h];
    for j in 0..h {
        dx[j] = dz * p[lay.head_w + j];
    }

    for (lo, lc) in lay.layers.iter().zip(&seq.layers).rev() {
        // second layer norm
        let mut dr2 = vec![0.0; n * h];
        {
            let (dg, db) = grads[lo.ln2_gain..lo.ln2_bias + h].split_at_mut(h);
            layer_norm_backward(&dx, &lc.xhat2, &lc.inv_std2, h, &p[lo.ln2_gain..lo.ln2_gain + h], dg, db, &mut dr2);
        }
        let mut dh1 = dr2.clone();

        // feed-forward
        accum_xt_dy(&lc.f_act, n, f, &dr2, h, &mut grads[lo.w2..lo.w2 + f * h]);
        accum_rows(&dr2, h, &mut grads[lo.b2..lo.b2 + h]);
        let mut df = vec![0.0; n * f];
        accum_dy_wt(&dr2, n, h, &p[lo.w2..lo.w2 + f * h], f, &mut df);
        match &lc.ffn_drop {
            Some(m) => {
                for ((d, &z), &s) in df.iter_mut().zip(&lc.f_pre).zip(m) {
                    *d *= s * gelu_grad(z);
                }
            }
            None => {
                for (d, &z) in df.iter_mut().zip(&lc.f_pre) {
                    *d *= gelu_grad(z);
                }
            }
        }
        accum_xt_dy(&lc.h1, n, h, &df, f, &mut grads[lo.w1..lo.w1 + h * f]);
        accum_rows(&df, f, &mut grads[lo.b1..lo.b1 + f]);
        accum_dy_wt(&df, n, f, &p[lo.w1..lo.w1 + h * f], h, &mut dh1);

        // first layer norm
        let mut dr1 = vec![0.0; n * h];
        {
            let (dg, db) = grads[lo.ln1_gain..lo.ln1_bias + h].split_at_mut(h);
            layer_norm_backward(&dh1, &lc.xhat1, &lc.inv_std1, h, &p[lo.ln1_gain..lo.ln1_gain + h], dg, db, &mut dr1);
        }
        let mut dx_in = dr1.clone();

        // output projection
        accum_xt_dy(&lc.ctx, n, h, &dr1, h, &mut grads[lo.wo..lo.wo + h * h]);
        accum_rows(&dr1, h, &mut grads[lo.bo..lo.bo + h]);
        let mut dctx = vec![0.0; n * h];
        accum_dy_wt(&dr1, n, h, &p[lo.wo..lo.wo + h * h], h, &mut dctx);

        // attention
        let mut dq = vec![0.0; n * h];
        let mut dk = vec![0.0; n * h];
        let mut dv = vec![0.0; n * h];
        let mut dp = vec![0.0; n];
        for a in 0..heads {
            for i in 0..n {
                let base = (a * n + i) * n;
                let probs = &lc.probs[base..base + n];
                let dci = &dctx[i * h + a * hd..][..hd];
                let mut weighted = 0.0;
                for j in 0..n {
                    let m = lc.attn_drop.as_ref().map_or(1.0, |m| m[base + j]);
                    let vj = &lc.v[j * h + a * hd..][..hd];
                    dp[j] = dot(dci, vj) * m;
                    weighted += dp[j] * probs[j];
                    let w = probs[j] * m;
                    if w != 0.0 {
                        let dvj = &mut dv[j * h + a * hd..][..hd];
                        for (d, &g) in dvj.iter_mut().zip(dci) {
                            *d += w * g;
                        }
                    }
                }
                let qi = &lc.q[i * h + a * hd..][..hd];
                for j in 0..n {
                    let ds = probs[j] * (dp[j] - weighted) * scale;
                    if ds == 0.0 {
                        continue;
                    }
                    let kj = &lc.k[j * h + a * hd..][..hd];
                    let dqi = &mut dq[i * h + a * hd..][..hd];
                    for (d, &kv) in dqi.iter_mut().zip(kj) {
                        *d += ds * kv;
                    }
                    let dkj = &mut dk[j * h + a * hd..][..hd];
                    for (d, &qv) in dkj.iter_mut().zip(qi) {
                        *d += ds * qv;
                    }
                }
            }
        }
        for (w, b, d) in [(lo.wq, lo.bq, &dq), (lo.wk, lo.bk, &dk), (lo.wv, lo.bv, &dv)] {
            accum_xt_dy(&lc.x, n, h, d, h, &mut grads[w..w + h * h]);
            accum_rows(d, h, &mut grads[b..b + h]);
            accum_dy_wt(d, n, h, &p[w..w + h * h], h, &mut dx_in);
        }
        dx = dx_in;
    }

    for t in 0..n {
        let row = &dx[t * h..(t + 1) * h];
        for (base, id) in [
            (lay.token_emb, seq.tokens[t] as usize),
            (lay.pos_emb, t),
            (lay.seg_emb, seq.segments[t] as usize),
        ] {
            let g = &mut grads[base + id * h..base + (id + 1) * h];
            for (d, &v) in g.iter_mut().zip(row) {
                *d += v;
            }
        }
    }
}

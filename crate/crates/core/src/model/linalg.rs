//! Row-major dense kernels. Shapes are passed explicitly; slices must match.

/// `out[r,c] = bias[c] + Σ_k x[r,k]·w[k,c]`
pub(crate) fn matmul_bias(x: &[f64], rows: usize, inner: usize, w: &[f64], cols: usize, bias: &[f64], out: &mut [f64]) {
    debug_assert_eq!(x.len(), rows * inner);
    debug_assert_eq!(w.len(), inner * cols);
    debug_assert_eq!(out.len(), rows * cols);
    for r in 0..rows {
        let o = &mut out[r * cols..(r + 1) * cols];
        o.copy_from_slice(bias);
        let xr = &x[r * inner..(r + 1) * inner];
        for (k, &xv) in xr.iter().enumerate() {
            let wk = &w[k * cols..(k + 1) * cols];
            for (ov, &wv) in o.iter_mut().zip(wk) {
                *ov += xv * wv;
            }
        }
    }
}

/// `dw[k,c] += Σ_r x[r,k]·dy[r,c]`
pub(crate) fn accum_xt_dy(x: &[f64], rows: usize, inner: usize, dy: &[f64], cols: usize, dw: &mut [f64]) {
    for r in 0..rows {
        let xr = &x[r * inner..(r + 1) * inner];
        let dyr = &dy[r * cols..(r + 1) * cols];
        for (k, &xv) in xr.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let dwk = &mut dw[k * cols..(k + 1) * cols];
            for (d, &g) in dwk.iter_mut().zip(dyr) {
                *d += xv * g;
            }
        }
    }
}

/// `db[c] += Σ_r dy[r,c]`
pub(crate) fn accum_rows(dy: &[f64], cols: usize, db: &mut [f64]) {
    for row in dy.chunks_exact(cols) {
        for (d, &g) in db.iter_mut().zip(row) {
            *d += g;
        }
    }
}

/// `dx[r,k] += Σ_c dy[r,c]·w[k,c]`
pub(crate) fn accum_dy_wt(dy: &[f64], rows: usize, cols: usize, w: &[f64], inner: usize, dx: &mut [f64]) {
    for r in 0..rows {
        let dyr = &dy[r * cols..(r + 1) * cols];
        let dxr = &mut dx[r * inner..(r + 1) * inner];
        for (k, d) in dxr.iter_mut().enumerate() {
            *d += dot(dyr, &w[k * cols..(k + 1) * cols]);
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
pub(crate) const GELU_A: f64 = 0.044_715;

/// `0.5·x·(1 + tanh(√(2/π)·(x + 0.044715·x³)))`
#[inline]
pub(crate) fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::tanh(GELU_C * (x + GELU_A * x * x * x)))
}

#[inline]
pub(crate) fn gelu_grad(x: f64) -> f64 {
    let t = libm::tanh(GELU_C * (x + GELU_A * x * x * x));
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Normalises each row in place into `xhat`, writing `1/σ` per row.
pub(crate) fn layer_norm(x: &[f64], cols: usize, gain: &[f64], bias: &[f64], xhat: &mut [f64], inv_std: &mut [f64], out: &mut [f64]) {
    for (r, row) in x.chunks_exact(cols).enumerate() {
        let mean = row.iter().sum::<f64>() / cols as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
        let is = 1.0 / libm::sqrt(var + super::LAYER_NORM_EPS);
        inv_std[r] = is;
        for c in 0..cols {
            let xh = (row[c] - mean) * is;
            xhat[r * cols + c] = xh;
            out[r * cols + c] = gain[c] * xh + bias[c];
        }
    }
}

/// Backward of [`layer_norm`]: accumulates gain/bias grads, writes `dx`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn layer_norm_backward(dy: &[f64], xhat: &[f64], inv_std: &[f64], cols: usize, gain: &[f64], dgain: &mut [f64], dbias: &mut [f64], dx: &mut [f64]) {
    let n = cols as f64;
    for r in 0..inv_std.len() {
        let dyr = &dy[r * cols..(r + 1) * cols];
        let xr = &xhat[r * cols..(r + 1) * cols];
        let mut mean_dxh = 0.0;
        let mut mean_dxh_xh = 0.0;
        for c in 0..cols {
            dgain[c] += dyr[c] * xr[c];
            dbias[c] += dyr[c];
            let dxh = dyr[c] * gain[c];
            mean_dxh += dxh;
            mean_dxh_xh += dxh * xr[c];
        }
        mean_dxh /= n;
        mean_dxh_xh /= n;
        for c in 0..cols {
            let dxh = dyr[c] * gain[c];
            dx[r * cols + c] = inv_std[r] * (dxh - mean_dxh - xr[c] * mean_dxh_xh);
        }
    }
}

//! Layer primitives for the predictor: 3×3 same-padding convolution,
//! per-channel instance normalization, ReLU, and the logistic output —
//! each with a hand-derived backward pass. Gradient buffers are
//! *accumulated into* (callers zero them once per batch), which keeps
//! mini-batch averaging a single final scale.

use crate::{Real, Tensor};

/// `dst[y, x] += wv * src[y + ky - 1, x + kx - 1]` over the in-bounds
/// overlap of two same-sized planes; the shared inner loop of convolution
/// forward and its input gradient.
#[inline]
fn accumulate_shifted<S: Real>(
    dst: &mut [S],
    src: &[S],
    wv: S,
    rows: usize,
    cols: usize,
    ky: usize,
    kx: usize,
) {
    let dy = ky as isize - 1;
    let dx = kx as isize - 1;
    let y0 = (-dy).max(0) as usize;
    let y1 = ((rows as isize - dy).min(rows as isize)).max(0) as usize;
    let x0 = (-dx).max(0) as usize;
    let x1 = ((cols as isize - dx).min(cols as isize)).max(0) as usize;
    if x0 >= x1 {
        return;
    }
    for y in y0..y1 {
        let sy = (y as isize + dy) as usize;
        let sx = (x0 as isize + dx) as usize;
        let d = &mut dst[y * cols + x0..y * cols + x1];
        let s = &src[sy * cols + sx..sy * cols + sx + (x1 - x0)];
        for (dv, sv) in d.iter_mut().zip(s) {
            *dv = *dv + wv * *sv;
        }
    }
}

/// `Σ a[y, x] * b[y + ky - 1, x + kx - 1]` over the in-bounds overlap; the
/// weight-gradient inner loop.
#[inline]
fn dot_shifted<S: Real>(a: &[S], b: &[S], rows: usize, cols: usize, ky: usize, kx: usize) -> S {
    let dy = ky as isize - 1;
    let dx = kx as isize - 1;
    let y0 = (-dy).max(0) as usize;
    let y1 = ((rows as isize - dy).min(rows as isize)).max(0) as usize;
    let x0 = (-dx).max(0) as usize;
    let x1 = ((cols as isize - dx).min(cols as isize)).max(0) as usize;
    let mut acc = S::zero();
    if x0 >= x1 {
        return acc;
    }
    for y in y0..y1 {
        let sy = (y as isize + dy) as usize;
        let sx = (x0 as isize + dx) as usize;
        let av = &a[y * cols + x0..y * cols + x1];
        let bv = &b[sy * cols + sx..sy * cols + sx + (x1 - x0)];
        for (x, y) in av.iter().zip(bv) {
            acc = acc + *x * *y;
        }
    }
    acc
}

/// 3×3 convolution, stride 1, zero padding (spatial shape preserved).
/// `weight` is `[out, in, 3, 3]` row-major, `bias` one value per output
/// channel.
pub(crate) fn conv3x3_forward<S: Real>(
    input: &Tensor<S>,
    weight: &[S],
    bias: &[S],
    out_channels: usize,
) -> Tensor<S> {
    let (ic, rows, cols) = (input.channels(), input.rows(), input.cols());
    debug_assert_eq!(weight.len(), out_channels * ic * 9);
    debug_assert_eq!(bias.len(), out_channels);
    let mut out = Tensor::zeros(out_channels, rows, cols);
    for o in 0..out_channels {
        let plane = out.channel_data_mut(o);
        plane.fill(bias[o]);
        for i in 0..ic {
            let src = input.channel_data(i);
            for ky in 0..3 {
                for kx in 0..3 {
                    let wv = weight[((o * ic + i) * 3 + ky) * 3 + kx];
                    accumulate_shifted(plane, src, wv, rows, cols, ky, kx);
                }
            }
        }
    }
    out
}

/// Backward pass of [`conv3x3_forward`]: accumulates `d_weight`/`d_bias`
/// and, when requested, returns the gradient with respect to the input.
pub(crate) fn conv3x3_backward<S: Real>(
    input: &Tensor<S>,
    weight: &[S],
    out_channels: usize,
    d_out: &Tensor<S>,
    d_weight: &mut [S],
    d_bias: &mut [S],
    want_d_input: bool,
) -> Option<Tensor<S>> {
    let (ic, rows, cols) = (input.channels(), input.rows(), input.cols());
    debug_assert_eq!(d_out.channels(), out_channels);
    let mut d_input = if want_d_input {
        Some(Tensor::zeros(ic, rows, cols))
    } else {
        None
    };
    for (o, db) in d_bias.iter_mut().enumerate().take(out_channels) {
        let g = d_out.channel_data(o);
        let mut bias_sum = S::zero();
        for v in g {
            bias_sum = bias_sum + *v;
        }
        *db = *db + bias_sum;
        for i in 0..ic {
            let src = input.channel_data(i);
            for ky in 0..3 {
                for kx in 0..3 {
                    let widx = ((o * ic + i) * 3 + ky) * 3 + kx;
                    d_weight[widx] =
                        d_weight[widx] + dot_shifted(g, src, rows, cols, ky, kx);
                    if let Some(di) = d_input.as_mut() {
                        // The input gradient is the correlation with the
                        // kernel mirrored in both axes.
                        accumulate_shifted(
                            di.channel_data_mut(i),
                            g,
                            weight[widx],
                            rows,
                            cols,
                            2 - ky,
                            2 - kx,
                        );
                    }
                }
            }
        }
    }
    d_input
}

/// Per-channel normalization by the plane's own mean/variance (biased),
/// then the learned affine `gamma * xhat + beta`. Returns the output plus
/// the normalized activations and inverse standard deviations the backward
/// pass needs.
pub(crate) fn instance_norm_forward<S: Real>(
    input: &Tensor<S>,
    gamma: &[S],
    beta: &[S],
    eps: S,
) -> (Tensor<S>, Tensor<S>, Vec<S>) {
    let (c, rows, cols) = (input.channels(), input.rows(), input.cols());
    let n = S::of_usize(rows * cols);
    let mut out = Tensor::zeros(c, rows, cols);
    let mut xhat = Tensor::zeros(c, rows, cols);
    let mut invstd = Vec::with_capacity(c);
    for ch in 0..c {
        let src = input.channel_data(ch);
        let mut mean = S::zero();
        for v in src {
            mean = mean + *v;
        }
        mean = mean / n;
        let mut var = S::zero();
        for v in src {
            let d = *v - mean;
            var = var + d * d;
        }
        var = var / n;
        let istd = S::one() / (var + eps).sqrt();
        invstd.push(istd);
        let (g, b) = (gamma[ch], beta[ch]);
        let xh = xhat.channel_data_mut(ch);
        for (dst, v) in xh.iter_mut().zip(src) {
            *dst = (*v - mean) * istd;
        }
        let ov = out.channel_data_mut(ch);
        for (dst, v) in ov.iter_mut().zip(&*xh) {
            *dst = g * *v + b;
        }
    }
    (out, xhat, invstd)
}

/// Backward pass of [`instance_norm_forward`]; accumulates `d_gamma`/
/// `d_beta` and returns the input gradient.
pub(crate) fn instance_norm_backward<S: Real>(
    d_out: &Tensor<S>,
    xhat: &Tensor<S>,
    invstd: &[S],
    gamma: &[S],
    d_gamma: &mut [S],
    d_beta: &mut [S],
) -> Tensor<S> {
    let (c, rows, cols) = (d_out.channels(), d_out.rows(), d_out.cols());
    let n = S::of_usize(rows * cols);
    let mut d_input = Tensor::zeros(c, rows, cols);
    for ch in 0..c {
        let g = d_out.channel_data(ch);
        let xh = xhat.channel_data(ch);
        let mut sum_dy = S::zero();
        let mut sum_dy_xhat = S::zero();
        for (dy, x) in g.iter().zip(xh) {
            sum_dy = sum_dy + *dy;
            sum_dy_xhat = sum_dy_xhat + *dy * *x;
        }
        d_gamma[ch] = d_gamma[ch] + sum_dy_xhat;
        d_beta[ch] = d_beta[ch] + sum_dy;
        // dL/dx = invstd * gamma * (dy - mean(dy) - xhat * mean(dy * xhat)),
        // the classic mean/variance chain rule with both statistics in play.
        let scale = invstd[ch] * gamma[ch];
        let mean_dy = sum_dy / n;
        let mean_dy_xhat = sum_dy_xhat / n;
        let di = d_input.channel_data_mut(ch);
        for ((dst, dy), x) in di.iter_mut().zip(g).zip(xh) {
            *dst = scale * (*dy - mean_dy - *x * mean_dy_xhat);
        }
    }
    d_input
}

pub(crate) fn relu_forward<S: Real>(input: &Tensor<S>) -> Tensor<S> {
    let mut out = input.clone();
    for v in out.data_mut() {
        if *v < S::zero() {
            *v = S::zero();
        }
    }
    out
}

/// ReLU gradient gated by the *pre-activation* sign (zero at exactly 0).
pub(crate) fn relu_backward<S: Real>(d_out: &Tensor<S>, pre: &Tensor<S>) -> Tensor<S> {
    let mut d_input = d_out.clone();
    for (dv, p) in d_input.data_mut().iter_mut().zip(pre.data()) {
        if !(*p > S::zero()) {
            *dv = S::zero();
        }
    }
    d_input
}

pub(crate) fn sigmoid_forward<S: Real>(input: &Tensor<S>) -> Tensor<S> {
    let mut out = input.clone();
    for v in out.data_mut() {
        *v = S::one() / (S::one() + (-*v).exp());
    }
    out
}

/// Sigmoid gradient expressed through the saved output: `s * (1 - s)`.
pub(crate) fn sigmoid_backward<S: Real>(d_out: &Tensor<S>, output: &Tensor<S>) -> Tensor<S> {
    let mut d_input = d_out.clone();
    for (dv, s) in d_input.data_mut().iter_mut().zip(output.data()) {
        *dv = *dv * *s * (S::one() - *s);
    }
    d_input
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tensor(c: usize, r: usize, w: usize, vals: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(c, r, w, vals.to_vec()).unwrap()
    }

    #[test]
    fn conv_identity_kernel_reproduces_the_input() {
        let input = tensor(1, 2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut weight = vec![0.0; 9];
        weight[4] = 1.0; // centre tap
        let out = conv3x3_forward(&input, &weight, &[0.0], 1);
        assert_eq!(out.data(), input.data());
    }

    #[test]
    fn conv_averaging_kernel_pads_with_zeros() {
        let input = tensor(1, 2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let weight = vec![1.0; 9];
        let out = conv3x3_forward(&input, &weight, &[0.5], 1);
        // Every output sums the four in-bounds ones plus the bias.
        assert_eq!(out.data(), &[4.5, 4.5, 4.5, 4.5]);
    }

    #[test]
    fn conv_mixes_input_channels() {
        let input = tensor(2, 1, 1, &[3.0, 5.0]);
        let mut weight = vec![0.0; 2 * 9];
        weight[4] = 2.0; // channel 0 centre
        weight[9 + 4] = 10.0; // channel 1 centre
        let out = conv3x3_forward(&input, &weight, &[1.0], 1);
        assert_eq!(out.data(), &[2.0 * 3.0 + 10.0 * 5.0 + 1.0]);
    }

    #[test]
    fn conv_backward_matches_finite_differences() {
        // 2 in, 2 out channels on a 3×4 plane with deterministic data.
        let (ic, oc, rows, cols) = (2usize, 2usize, 3usize, 4usize);
        let input = Tensor::from_vec(
            ic,
            rows,
            cols,
            (0..ic * rows * cols)
                .map(|i| ((i * 37 % 11) as f64) / 7.0 - 0.6)
                .collect(),
        )
        .unwrap();
        let weight: Vec<f64> = (0..oc * ic * 9)
            .map(|i| ((i * 29 % 13) as f64) / 9.0 - 0.7)
            .collect();
        let bias = vec![0.1, -0.2];
        // Scalar objective: weighted sum of outputs.
        let coef: Vec<f64> = (0..oc * rows * cols)
            .map(|i| ((i * 17 % 7) as f64) / 3.0 - 1.0)
            .collect();
        let objective = |w: &[f64], b: &[f64], x: &Tensor<f64>| -> f64 {
            conv3x3_forward(x, w, b, oc)
                .data()
                .iter()
                .zip(&coef)
                .map(|(o, c)| o * c)
                .sum()
        };

        let d_out = Tensor::from_vec(oc, rows, cols, coef.clone()).unwrap();
        let mut dw = vec![0.0; weight.len()];
        let mut db = vec![0.0; bias.len()];
        let din = conv3x3_backward(&input, &weight, oc, &d_out, &mut dw, &mut db, true).unwrap();

        let h = 1e-6;
        for idx in [0usize, 4, 9, 17, 35] {
            let mut wp = weight.clone();
            wp[idx] += h;
            let mut wm = weight.clone();
            wm[idx] -= h;
            let fd = (objective(&wp, &bias, &input) - objective(&wm, &bias, &input)) / (2.0 * h);
            assert_abs_diff_eq!(dw[idx], fd, epsilon = 1e-6);
        }
        for idx in 0..oc {
            let mut bp = bias.clone();
            bp[idx] += h;
            let mut bm = bias.clone();
            bm[idx] -= h;
            let fd = (objective(&weight, &bp, &input) - objective(&weight, &bm, &input)) / (2.0 * h);
            assert_abs_diff_eq!(db[idx], fd, epsilon = 1e-6);
        }
        for idx in [0usize, 5, 13, 23] {
            let mut xp = input.clone();
            xp.data_mut()[idx] += h;
            let mut xm = input.clone();
            xm.data_mut()[idx] -= h;
            let fd = (objective(&weight, &bias, &xp) - objective(&weight, &bias, &xm)) / (2.0 * h);
            assert_abs_diff_eq!(din.data()[idx], fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn instance_norm_standardizes_each_channel() {
        let input = tensor(1, 2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let (out, xhat, invstd) = instance_norm_forward(&input, &[2.0], &[0.5], 1e-5);
        // mean 2.5, biased variance 1.25.
        let istd = 1.0 / (1.25f64 + 1e-5).sqrt();
        assert_abs_diff_eq!(invstd[0], istd, epsilon = 1e-12);
        assert_abs_diff_eq!(xhat.data()[0], -1.5 * istd, epsilon = 1e-12);
        assert_abs_diff_eq!(out.data()[3], 2.0 * 1.5 * istd + 0.5, epsilon = 1e-12);
    }

    #[test]
    fn normalized_activations_ignore_positive_input_scaling() {
        // Large spread keeps the epsilon term negligible relative to the
        // variance, which is what the invariance claim assumes.
        let vals: Vec<f64> = (0..64).map(|i| (i as f64) - 31.5).collect();
        let input = Tensor::from_vec(1, 8, 8, vals.clone()).unwrap();
        let scaled = Tensor::from_vec(1, 8, 8, vals.iter().map(|v| v * 3.7).collect()).unwrap();
        let (_, xhat_a, _) = instance_norm_forward(&input, &[1.0], &[0.0], 1e-5);
        let (_, xhat_b, _) = instance_norm_forward(&scaled, &[1.0], &[0.0], 1e-5);
        for (a, b) in xhat_a.data().iter().zip(xhat_b.data()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn instance_norm_backward_matches_finite_differences() {
        let vals: Vec<f64> = (0..12).map(|i| ((i * 23 % 9) as f64) / 4.0 - 1.0).collect();
        let input = Tensor::from_vec(1, 3, 4, vals).unwrap();
        let gamma = [1.3];
        let beta = [-0.4];
        let coef: Vec<f64> = (0..12).map(|i| ((i * 31 % 5) as f64) / 2.0 - 1.0).collect();
        let objective = |x: &Tensor<f64>, g: &[f64], b: &[f64]| -> f64 {
            instance_norm_forward(x, g, b, 1e-5)
                .0
                .data()
                .iter()
                .zip(&coef)
                .map(|(o, c)| o * c)
                .sum()
        };

        let (_, xhat, invstd) = instance_norm_forward(&input, &gamma, &beta, 1e-5);
        let d_out = Tensor::from_vec(1, 3, 4, coef.clone()).unwrap();
        let mut dg = vec![0.0];
        let mut db = vec![0.0];
        let din = instance_norm_backward(&d_out, &xhat, &invstd, &gamma, &mut dg, &mut db);

        let h = 1e-6;
        for idx in [0usize, 3, 7, 11] {
            let mut xp = input.clone();
            xp.data_mut()[idx] += h;
            let mut xm = input.clone();
            xm.data_mut()[idx] -= h;
            let fd = (objective(&xp, &gamma, &beta) - objective(&xm, &gamma, &beta)) / (2.0 * h);
            assert_abs_diff_eq!(din.data()[idx], fd, epsilon = 1e-6);
        }
        let fd_g = (objective(&input, &[gamma[0] + h], &beta)
            - objective(&input, &[gamma[0] - h], &beta))
            / (2.0 * h);
        assert_abs_diff_eq!(dg[0], fd_g, epsilon = 1e-6);
        let fd_b = (objective(&input, &gamma, &[beta[0] + h])
            - objective(&input, &gamma, &[beta[0] - h]))
            / (2.0 * h);
        assert_abs_diff_eq!(db[0], fd_b, epsilon = 1e-6);
    }

    #[test]
    fn relu_and_sigmoid_round_trip_their_gradients() {
        let pre = tensor(1, 1, 4, &[-1.0, 0.0, 0.5, 2.0]);
        let out = relu_forward(&pre);
        assert_eq!(out.data(), &[0.0, 0.0, 0.5, 2.0]);
        let ones = tensor(1, 1, 4, &[1.0; 4]);
        let back = relu_backward(&ones, &pre);
        assert_eq!(back.data(), &[0.0, 0.0, 1.0, 1.0]);

        let s = sigmoid_forward(&pre);
        assert_abs_diff_eq!(s.data()[0], 1.0 / (1.0 + 1f64.exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(s.data()[1], 0.5, epsilon = 1e-15);
        let ds = sigmoid_backward(&ones, &s);
        assert_abs_diff_eq!(ds.data()[1], 0.25, epsilon = 1e-15);
    }
}

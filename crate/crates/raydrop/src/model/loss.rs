//! Supervision terms for the predictor, their analytic gradients, and the
//! rule combining the two output channels into one enhanced mask.
//!
//! The dense target mask `M` carries both signals at once: `M > 0` marks
//! pixels where a return exists (the return/no-return target), and the value
//! itself is the intensity target on exactly those pixels. The return term
//! is a plain mean so its per-pixel sensitivity is constant — under an
//! asymmetric drop pattern that steers each pixel toward the *median* of its
//! targets, which is the behaviour the raydrop channel needs. The intensity
//! term is a root-mean-square over the valid pixels only, which makes the
//! two terms scale-comparable under the plain sum `total = raydrop +
//! intensity`.

use crate::types::{DenseIntensityMask, PredictorOutput};
use crate::{Grid, Real, Tensor};

/// The two supervision terms and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue<S> {
    pub raydrop: S,
    pub intensity: S,
    pub total: S,
}

fn assert_same_shape<S, T>(what: &str, a: &Grid<S>, b: &Grid<T>) {
    assert!(
        a.same_shape(b),
        "{what}: shape mismatch ({}x{} vs {}x{})",
        a.rows(),
        a.cols(),
        b.rows(),
        b.cols()
    );
}

/// Mean absolute error between the return-probability channel and the
/// binary return pattern `1[M > 0]`, over *all* pixels.
///
/// # Panics
/// On shape mismatch.
pub fn raydrop_loss<S: Real>(pred_r: &Grid<S>, target: &DenseIntensityMask<S>) -> S {
    assert_same_shape("raydrop_loss", pred_r, target.values());
    let mut sum = S::zero();
    for (p, m) in pred_r.data().iter().zip(target.values().data()) {
        let t = if *m > S::zero() { S::one() } else { S::zero() };
        sum = sum + (*p - t).abs();
    }
    sum / S::of_usize(pred_r.data().len())
}

/// Root-mean-square error between the intensity channel and `M`, restricted
/// to valid pixels (`M > 0`); zero when no pixel is valid.
///
/// # Panics
/// On shape mismatch.
pub fn intensity_loss<S: Real>(pred_i: &Grid<S>, target: &DenseIntensityMask<S>) -> S {
    assert_same_shape("intensity_loss", pred_i, target.values());
    let mut sum_sq = S::zero();
    let mut count = 0usize;
    for (p, m) in pred_i.data().iter().zip(target.values().data()) {
        if *m > S::zero() {
            let e = *p - *m;
            sum_sq = sum_sq + e * e;
            count += 1;
        }
    }
    if count == 0 {
        S::zero()
    } else {
        (sum_sq / S::of_usize(count)).sqrt()
    }
}

/// Both terms plus their plain (unweighted) sum.
pub fn total_loss<S: Real>(pred: &PredictorOutput<S>, target: &DenseIntensityMask<S>) -> LossValue<S> {
    let raydrop = raydrop_loss(pred.raydrop(), target);
    let intensity = intensity_loss(pred.intensity(), target);
    LossValue {
        raydrop,
        intensity,
        total: raydrop + intensity,
    }
}

/// The enhanced mask: intensity gated by the *strictly* thresholded return
/// probability — `1[pred_R > threshold] * pred_I`. Scaling the probability
/// channel monotonically around the threshold cannot change the result.
pub fn combine_prediction<S: Real>(pred: &PredictorOutput<S>, threshold: S) -> Grid<S> {
    let mut out = pred.intensity().clone();
    for (v, r) in out.data_mut().iter_mut().zip(pred.raydrop().data()) {
        if !(*r > threshold) {
            *v = S::zero();
        }
    }
    out
}

/// Loss plus its gradient with respect to the two prediction channels
/// (channel 0 = return probability, channel 1 = intensity), ready to feed
/// the network's reverse pass.
///
/// The mean-absolute term contributes `sign(residual) / n_pixels`; the
/// root-mean-square term contributes `residual / (count * loss)` on valid
/// pixels and zero when the term itself is zero (its one flat point).
pub fn loss_with_gradient<S: Real>(
    pred: &PredictorOutput<S>,
    target: &DenseIntensityMask<S>,
) -> (LossValue<S>, Tensor<S>) {
    let loss = total_loss(pred, target);
    let (rows, cols) = (pred.height(), pred.width());
    let mut grad = Tensor::zeros(2, rows, cols);
    let n = S::of_usize(rows * cols);

    {
        let g = grad.channel_data_mut(0);
        for ((dst, p), m) in g
            .iter_mut()
            .zip(pred.raydrop().data())
            .zip(target.values().data())
        {
            let t = if *m > S::zero() { S::one() } else { S::zero() };
            let r = *p - t;
            *dst = if r > S::zero() {
                S::one() / n
            } else if r < S::zero() {
                -S::one() / n
            } else {
                S::zero()
            };
        }
    }

    if loss.intensity > S::zero() {
        let count = target
            .values()
            .data()
            .iter()
            .filter(|m| **m > S::zero())
            .count();
        let denom = S::of_usize(count) * loss.intensity;
        let g = grad.channel_data_mut(1);
        for ((dst, p), m) in g
            .iter_mut()
            .zip(pred.intensity().data())
            .zip(target.values().data())
        {
            if *m > S::zero() {
                *dst = (*p - *m) / denom;
            }
        }
    }

    (loss, grad)
}

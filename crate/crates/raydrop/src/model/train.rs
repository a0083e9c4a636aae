//! Mini-batch Adam training of the predictor, the learning-rate schedule,
//! and a finite-difference verifier for the hand-written backward pass.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::loss::{loss_with_gradient, LossValue};
use super::rinet::{RinetLite, MIN_IMAGE_SIDE};
use crate::types::{AppearanceImage, DenseIntensityMask};
use crate::Real;

/// One training pair: an appearance image and its dense target mask.
pub type TrainSample<S> = (AppearanceImage<S>, DenseIntensityMask<S>);

/// Optimization hyperparameters. The schedule holds the base rate constant
/// and then decays linearly to zero across the final `decay_window` epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub decay_window: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Seed for shuffling (one stream across all epochs).
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 4,
            base_lr: 2e-2,
            decay_window: 10,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        if self.epochs < self.decay_window {
            return Err(TrainError::BadConfig {
                message: format!(
                    "epochs ({}) must be at least the decay window ({})",
                    self.epochs, self.decay_window
                ),
            });
        }
        if !(self.base_lr > 0.0) || !self.base_lr.is_finite() {
            return Err(TrainError::BadConfig {
                message: format!("base learning rate must be positive, got {}", self.base_lr),
            });
        }
        if self.batch_size == 0 {
            return Err(TrainError::BadConfig {
                message: "batch size must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// The scheduled learning rate for one epoch: the base rate until the decay
/// window begins, then a linear ramp hitting zero one epoch past the end.
///
/// # Panics
/// If `epoch >= cfg.epochs`.
pub fn learning_rate(cfg: &TrainConfig, epoch: usize) -> f64 {
    assert!(
        epoch < cfg.epochs,
        "epoch {epoch} out of range for {} training epochs",
        cfg.epochs
    );
    if cfg.decay_window == 0 || epoch < cfg.epochs - cfg.decay_window {
        cfg.base_lr
    } else {
        cfg.base_lr * (cfg.epochs - epoch) as f64 / cfg.decay_window as f64
    }
}

/// Per-epoch mean losses and the rate used that epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub raydrop: f64,
    pub intensity: f64,
    pub total: f64,
    pub learning_rate: f64,
}

/// Loss trace of a completed run, one entry per epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

impl TrainReport {
    pub fn final_total(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.total)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("invalid training configuration: {message}")]
    BadConfig { message: String },
    #[error("sample {index}: {message}")]
    BadSample { index: usize, message: String },
    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },
}

fn validate_dataset<S: Real>(dataset: &[TrainSample<S>]) -> Result<(), TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let (w0, h0) = (dataset[0].0.width(), dataset[0].0.height());
    for (index, (image, mask)) in dataset.iter().enumerate() {
        if image.width() != w0 || image.height() != h0 {
            return Err(TrainError::BadSample {
                index,
                message: format!(
                    "image is {}x{} but the dataset started at {}x{}",
                    image.width(),
                    image.height(),
                    w0,
                    h0
                ),
            });
        }
        if mask.width() != image.width() || mask.height() != image.height() {
            return Err(TrainError::BadSample {
                index,
                message: format!(
                    "mask is {}x{} but its image is {}x{}",
                    mask.width(),
                    mask.height(),
                    image.width(),
                    image.height()
                ),
            });
        }
        if image.width() < MIN_IMAGE_SIDE || image.height() < MIN_IMAGE_SIDE {
            return Err(TrainError::BadSample {
                index,
                message: format!(
                    "images must be at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}, got {}x{}",
                    image.width(),
                    image.height()
                ),
            });
        }
    }
    Ok(())
}

/// Runs mini-batch Adam on the summed supervision loss, mutating the model
/// in place. Shuffling draws from one seeded stream, so a fixed
/// `(model seed, cfg.seed)` pair reproduces the run bit for bit.
pub fn train<S: Real>(
    model: &mut RinetLite<S>,
    dataset: &[TrainSample<S>],
    cfg: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    cfg.validate()?;
    validate_dataset(dataset)?;

    let n_params = model.layout().len();
    let mut grads = vec![S::zero(); n_params];
    let mut m = vec![S::zero(); n_params];
    let mut v = vec![S::zero(); n_params];
    let mut beta1_t = 1.0f64;
    let mut beta2_t = 1.0f64;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    let mut report = TrainReport {
        epochs: Vec::with_capacity(cfg.epochs),
    };

    for epoch in 0..cfg.epochs {
        let lr = learning_rate(cfg, epoch);
        indices.shuffle(&mut rng);
        let mut epoch_loss = LossValue {
            raydrop: 0.0f64,
            intensity: 0.0,
            total: 0.0,
        };

        for (step, batch) in indices.chunks(cfg.batch_size).enumerate() {
            grads.iter_mut().for_each(|g| *g = S::zero());
            for &i in batch {
                let (image, mask) = &dataset[i];
                let (out, tape) = model.forward_with_tape(image.tensor());
                let pred = crate::types::PredictorOutput::from_grids(
                    out.channel_grid(0),
                    out.channel_grid(1),
                )
                .expect("sigmoid outputs always lie in [0, 1]");
                let (loss, d_out) = loss_with_gradient(&pred, mask);
                if !loss.total.is_finite() {
                    return Err(TrainError::NonFiniteLoss { epoch, step });
                }
                epoch_loss.raydrop += loss.raydrop.widen();
                epoch_loss.intensity += loss.intensity.widen();
                epoch_loss.total += loss.total.widen();
                model.backward(&tape, &d_out, &mut grads);
            }
            // Mean over the batch, matching the per-sample loss scale.
            let inv_batch = S::of(1.0 / batch.len() as f64);
            for g in grads.iter_mut() {
                *g = *g * inv_batch;
            }

            beta1_t *= cfg.beta1;
            beta2_t *= cfg.beta2;
            let b1 = S::of(cfg.beta1);
            let b2 = S::of(cfg.beta2);
            let one_m_b1 = S::of(1.0 - cfg.beta1);
            let one_m_b2 = S::of(1.0 - cfg.beta2);
            let corr1 = S::of(1.0 / (1.0 - beta1_t));
            let corr2 = S::of(1.0 / (1.0 - beta2_t));
            let eps = S::of(cfg.adam_eps);
            let step_lr = S::of(lr);
            let params = model.params_mut();
            for i in 0..n_params {
                let g = grads[i];
                m[i] = b1 * m[i] + one_m_b1 * g;
                v[i] = b2 * v[i] + one_m_b2 * g * g;
                let m_hat = m[i] * corr1;
                let v_hat = v[i] * corr2;
                params[i] = params[i] - step_lr * m_hat / (v_hat.sqrt() + eps);
            }
        }

        let n = dataset.len() as f64;
        report.epochs.push(EpochStats {
            raydrop: epoch_loss.raydrop / n,
            intensity: epoch_loss.intensity / n,
            total: epoch_loss.total / n,
            learning_rate: lr,
        });
    }
    Ok(report)
}

/// Outcome of [`gradient_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// Probes that produced a comparison.
    pub probes: usize,
    /// Probes rejected because the finite-difference stencil straddled a
    /// kink of the mean-absolute term (a residual changed sign).
    pub resampled: usize,
    /// Worst relative disagreement, `|ga - gfd| / max(1e-8, |ga| + |gfd|)`.
    pub max_rel_err: f64,
}

/// Central-difference step for [`gradient_check`].
pub const GRAD_CHECK_STEP: f64 = 1e-4;

/// Compares the analytic parameter gradient against central finite
/// differences of the total loss at `probes` randomly chosen parameters.
/// A probe is resampled if perturbing the parameter flips the sign of any
/// return-term residual, because the mean-absolute term is not
/// differentiable there. `probes == 0` reports zeros.
pub fn gradient_check<S: Real>(
    model: &RinetLite<S>,
    sample: &TrainSample<S>,
    probes: usize,
    seed: u64,
) -> GradCheckReport {
    let mut report = GradCheckReport {
        probes: 0,
        resampled: 0,
        max_rel_err: 0.0,
    };
    if probes == 0 {
        return report;
    }
    let (image, mask) = sample;
    let n_params = model.layout().len();

    let predict_with = |model: &RinetLite<S>| -> (f64, Vec<bool>) {
        let out = model.forward(image.tensor());
        let pred = crate::types::PredictorOutput::from_grids(
            out.channel_grid(0),
            out.channel_grid(1),
        )
        .expect("sigmoid outputs always lie in [0, 1]");
        let loss = super::loss::total_loss(&pred, mask);
        // Residual signs of the mean-absolute term, for kink detection.
        let signs = pred
            .raydrop()
            .data()
            .iter()
            .zip(mask.values().data())
            .map(|(p, m)| {
                let t = if *m > S::zero() { S::one() } else { S::zero() };
                *p - t > S::zero()
            })
            .collect();
        (loss.total.widen(), signs)
    };

    let mut grads = vec![S::zero(); n_params];
    let (out, tape) = model.forward_with_tape(image.tensor());
    let pred = crate::types::PredictorOutput::from_grids(out.channel_grid(0), out.channel_grid(1))
        .expect("sigmoid outputs always lie in [0, 1]");
    let (_, d_out) = loss_with_gradient(&pred, mask);
    model.backward(&tape, &d_out, &mut grads);

    let h = S::of(GRAD_CHECK_STEP);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perturbed = model.clone();
    let max_attempts = probes.saturating_mul(20).max(64);
    let mut attempts = 0;
    while report.probes < probes && attempts < max_attempts {
        attempts += 1;
        let idx = rng.gen_range(0..n_params);
        let original = perturbed.params()[idx];

        perturbed.params_mut()[idx] = original + h;
        let (loss_plus, signs_plus) = predict_with(&perturbed);
        perturbed.params_mut()[idx] = original - h;
        let (loss_minus, signs_minus) = predict_with(&perturbed);
        perturbed.params_mut()[idx] = original;

        if signs_plus != signs_minus {
            report.resampled += 1;
            continue;
        }
        let g_fd = (loss_plus - loss_minus) / (2.0 * GRAD_CHECK_STEP);
        let g_a = grads[idx].widen();
        let rel = (g_a - g_fd).abs() / (1e-8f64).max(g_a.abs() + g_fd.abs());
        report.max_rel_err = report.max_rel_err.max(rel);
        report.probes += 1;
    }
    report
}

/// Subgradient descent of a single scalar under the mean-absolute loss
/// `mean |theta - t_i|`: each step moves against the sign imbalance of the
/// residuals, so the iterate converges to (a small band around) the target
/// *median* — the recovery property the return-probability term relies on.
pub fn fit_scalar_l1<S: Real>(targets: &[S], steps: usize, lr: S, init: S) -> S {
    let mut theta = init;
    let n = S::of_usize(targets.len().max(1));
    for _ in 0..steps {
        let mut sub = S::zero();
        for t in targets {
            let r = theta - *t;
            if r > S::zero() {
                sub = sub + S::one();
            } else if r < S::zero() {
                sub = sub - S::one();
            }
        }
        theta = theta - lr * sub / n;
    }
    theta
}

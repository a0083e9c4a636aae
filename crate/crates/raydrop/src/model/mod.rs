//! The learned appearance→LiDAR predictor: network, losses, optimizer, and
//! gradient verification.

mod layers;
mod loss;
mod rinet;
mod train;

pub use loss::{
    combine_prediction, intensity_loss, loss_with_gradient, raydrop_loss, total_loss, LossValue,
};
pub use rinet::{Layout, ModelConfig, RinetLite, Segment, Tape, MIN_IMAGE_SIDE, NORM_EPS};
pub use train::{
    fit_scalar_l1, gradient_check, learning_rate, train, EpochStats, GradCheckReport,
    TrainConfig, TrainError, TrainReport, TrainSample, GRAD_CHECK_STEP,
};

use thiserror::Error;

/// Errors from building, running, or deserializing the predictor.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input image is {rows}x{cols}; the network needs at least {min}x{min}",
        min = MIN_IMAGE_SIDE)]
    ImageTooSmall { rows: usize, cols: usize },
    #[error("weights file is missing tensor {name:?}")]
    MissingTensor { name: String },
    #[error("weights file has an unexpected tensor {name:?}")]
    UnexpectedTensor { name: String },
    #[error("tensor {name:?} has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("reserved configuration entry {name:?} is not a valid size")]
    BadConfigTensor { name: String },
    #[error("tensor {name:?} contains non-finite values")]
    NonFiniteParameter { name: String },
}

//! Learned raydrop and intensity for raycasted LiDAR point clouds.
//!
//! A naive LiDAR simulator raycasts scene geometry and reports a return for
//! every ray. Real sensors drop rays (glass, grazing hits) and measure a
//! per-return intensity. This crate closes that gap: it projects sensor
//! returns into a camera image, densifies them into an image-space intensity
//! mask, trains a small fully-convolutional network ([`model::RinetLite`]) to
//! predict raydrop and intensity from appearance, and applies the prediction
//! back onto raycasted clouds.
//!
//! Module map:
//!
//! - [`types`] — value types shared by every stage (range images, clouds,
//!   camera models, masks) with validating constructors.
//! - [`geometry`] — polar binning, pinhole projection, bilinear sampling.
//! - [`densify`] — meshing sparse projected returns and rasterizing them
//!   into a dense camera-space mask.
//! - [`model`] — the predictor network, its losses, training loop, and
//!   gradient checking.
//! - [`scene`] — an analytic scene oracle (ground plane + boxes) that
//!   produces paired appearance images and ground-truth range images.
//! - [`dataset`] — deterministic fixture generation on top of [`scene`].
//! - [`pipeline`] — applying predictions to clouds plus the stochastic
//!   raydrop noise model and evaluation metrics.
//! - [`io`] — binary tensor/weights/cloud files, PGM export, and the
//!   line-oriented config format.
//! - [`cli`] — the `raydrop` command-line tool built from the above.
//!
//! Numeric kernels are generic over the scalar type via [`Real`]:
//! precision-sensitive verification (gradient checks, round-trip tests) runs
//! in `f64` while throughput-sensitive training and the fixed little-endian
//! `f32` file formats use `f32`. Concrete aliases for both live at the crate
//! root.

// `!(x > t)` appears wherever a gate must fail closed: NaN compares false
// and therefore takes the conservative branch (drop the point, zero the
// gradient, reject the config). Rewriting via `partial_cmp` would hide that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataset;
pub mod densify;
pub mod geometry;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod scene;
pub mod types;

mod grid;

pub use grid::{Grid, Tensor};

/// Floating-point scalar every numeric kernel is generic over.
///
/// Implemented for `f32` and `f64`. The bounds cover what the kernels need:
/// arithmetic and transcendentals (`Float`), π et al. (`FloatConst`), and
/// conversions from literals and sizes (`FromPrimitive` / `ToPrimitive`).
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + core::fmt::Debug
    + core::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 literal converts to any Real")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn of_usize(value: usize) -> Self {
        // Counts at grid scale are far below 2^24, exact even in f32.
        Self::from_usize(value).expect("usize converts to any Real")
    }

    /// Widens this scalar to `f64` (exact for `f32` and `f64`).
    #[inline]
    fn widen(self) -> f64 {
        self.to_f64().expect("f32/f64 widen to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type SensorConfig32 = types::SensorConfig<f32>;
pub type SensorConfig64 = types::SensorConfig<f64>;
pub type RangeImage32 = types::RangeImage<f32>;
pub type RangeImage64 = types::RangeImage<f64>;
pub type PointCloud32 = types::PointCloud<f32>;
pub type PointCloud64 = types::PointCloud<f64>;
pub type CameraModel32 = types::CameraModel<f32>;
pub type CameraModel64 = types::CameraModel<f64>;
pub type AppearanceImage32 = types::AppearanceImage<f32>;
pub type AppearanceImage64 = types::AppearanceImage<f64>;
pub type DenseIntensityMask32 = types::DenseIntensityMask<f32>;
pub type DenseIntensityMask64 = types::DenseIntensityMask<f64>;
pub type PredictorOutput32 = types::PredictorOutput<f32>;
pub type PredictorOutput64 = types::PredictorOutput<f64>;
pub type RinetLite32 = model::RinetLite<f32>;
pub type RinetLite64 = model::RinetLite<f64>;
pub type Scene32 = scene::Scene<f32>;
pub type Scene64 = scene::Scene<f64>;

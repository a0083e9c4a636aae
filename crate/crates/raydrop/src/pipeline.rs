//! The enhancement pipeline: gate a clean point cloud through a predicted
//! raydrop/intensity pair, inject seeded uniform raydrop, reassemble range
//! images, and score results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{
    pointcloud_to_range_image, project_to_camera, range_image_to_pointcloud, sample_bilinear,
};
use crate::types::{
    CameraModel, Point, PointCloud, PredictorOutput, RangeImage, SensorConfig, ValidationError,
};
use crate::{Grid, Real};

/// Uniform random raydrop: each point is independently removed with
/// probability `p`, decided by a counter-based seeded stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub p: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { p: 0.45, seed: 0 }
    }
}

impl NoiseModel {
    pub fn new(p: f64, seed: u64) -> Result<Self, ValidationError> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(ValidationError::field(
                "NoiseModel",
                "p",
                format!("drop probability must lie in [0, 1], got {p}"),
            ));
        }
        Ok(Self { p, seed })
    }
}

/// What happens to points that do not project into the camera image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffFrustum {
    /// Keep the point but zero its intensity (there is no prediction for
    /// it); geometry outside the camera is preserved.
    #[default]
    KeepZeroIntensity,
    /// Remove the point.
    Drop,
}

/// Gating parameters for [`enhance_pointcloud`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhanceOptions<S> {
    /// A point survives only where the return probability strictly exceeds
    /// this.
    pub threshold: S,
    pub off_frustum: OffFrustum,
}

impl<S: Real> Default for EnhanceOptions<S> {
    fn default() -> Self {
        Self {
            threshold: S::of(0.5),
            off_frustum: OffFrustum::default(),
        }
    }
}

/// A point is "in frustum" when its projection lands inside the closed
/// pixel-centre hull `[0, W-1] x [0, H-1]`, where both the nearest-pixel
/// gate and bilinear sampling are defined.
fn in_frustum<S: Real>(u: S, v: S, width: usize, height: usize) -> bool {
    u >= S::zero()
        && u <= S::of_usize(width - 1)
        && v >= S::zero()
        && v <= S::of_usize(height - 1)
}

/// Applies a prediction to a point cloud: each in-frustum point is removed
/// where the return probability at the *nearest* pixel is at or below the
/// threshold (a probability field is not meaningfully interpolated across
/// an occlusion boundary), and otherwise kept with intensity bilinearly
/// sampled from the intensity channel. Survivor order is preserved; the
/// output is always a subsequence of the input with only intensities
/// changed.
///
/// # Panics
/// If the prediction dimensions do not match the camera.
pub fn enhance_pointcloud<S: Real>(
    pc: &PointCloud<S>,
    pred: &PredictorOutput<S>,
    cam: &CameraModel<S>,
    opts: &EnhanceOptions<S>,
) -> PointCloud<S> {
    assert_eq!(
        (pred.width(), pred.height()),
        (cam.width(), cam.height()),
        "prediction dimensions must match the camera"
    );
    let mut out = PointCloud::empty();
    for point in pc.points() {
        let projected = project_to_camera([point.x, point.y, point.z], cam)
            .filter(|px| in_frustum(px.u, px.v, cam.width(), cam.height()));
        let Some(px) = projected else {
            match opts.off_frustum {
                OffFrustum::KeepZeroIntensity => out.push(Point {
                    intensity: S::zero(),
                    ..*point
                }),
                OffFrustum::Drop => {}
            }
            continue;
        };
        let col = px.u.widen().round() as usize;
        let row = px.v.widen().round() as usize;
        if !(*pred.raydrop().get(row, col) > opts.threshold) {
            continue; // gated out: predicted raydrop at this pixel
        }
        let intensity = sample_bilinear(pred.intensity(), px.u, px.v)
            .expect("in-frustum projections lie inside the sample hull");
        out.push(Point {
            intensity,
            ..*point
        });
    }
    out
}

/// Independently removes each point with probability `p`. The decision for
/// point `i` reads the seeded ChaCha8 stream at a fixed per-index offset,
/// so it depends on the index alone: identical seeds give identical
/// decisions regardless of evaluation order or cloud length.
pub fn apply_random_raydrop<S: Real>(pc: &PointCloud<S>, noise: &NoiseModel) -> PointCloud<S> {
    let template = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut out = PointCloud::empty();
    for (index, point) in pc.points().iter().enumerate() {
        let mut rng = template.clone();
        // One f64 draw consumes two 32-bit words of the stream.
        rng.set_word_pos(2 * index as u128);
        if rng.gen::<f64>() >= noise.p {
            out.push(*point);
        }
    }
    out
}

/// Full enhancement of a clean range image: rebuild the cloud from bin
/// centres, gate it through the prediction, inject uniform raydrop (noise
/// comes after enhancement), and re-assemble the range image.
pub fn enhance_range_image<S: Real>(
    ri: &RangeImage<S>,
    cfg: &SensorConfig<S>,
    pred: &PredictorOutput<S>,
    cam: &CameraModel<S>,
    noise: &NoiseModel,
    opts: &EnhanceOptions<S>,
) -> RangeImage<S> {
    let cloud = range_image_to_pointcloud(ri, cfg);
    let enhanced = enhance_pointcloud(&cloud, pred, cam, opts);
    let noisy = apply_random_raydrop(&enhanced, noise);
    pointcloud_to_range_image(&noisy, cfg)
}

/// Intersection over union of two binary masks; 1 when both are empty.
///
/// # Panics
/// On shape mismatch.
pub fn mask_iou(a: &Grid<bool>, b: &Grid<bool>) -> f64 {
    assert!(
        a.same_shape(b),
        "mask_iou: shape mismatch ({}x{} vs {}x{})",
        a.rows(),
        a.cols(),
        b.rows(),
        b.cols()
    );
    let mut intersection = 0u64;
    let mut union = 0u64;
    for (x, y) in a.data().iter().zip(b.data()) {
        if *x && *y {
            intersection += 1;
        }
        if *x || *y {
            union += 1;
        }
    }
    if union == 0 {
        1.0
    } else {
        intersection as f64 / union as f64
    }
}

/// Mean absolute intensity error over pixels where the reference mask has a
/// value (`M > 0`); 0 when none do.
///
/// # Panics
/// On shape mismatch.
pub fn intensity_mae<S: Real>(pred: &Grid<S>, truth: &crate::types::DenseIntensityMask<S>) -> f64 {
    assert!(
        pred.same_shape(truth.values()),
        "intensity_mae: shape mismatch ({}x{} vs {}x{})",
        pred.rows(),
        pred.cols(),
        truth.height(),
        truth.width()
    );
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for (p, m) in pred.data().iter().zip(truth.values().data()) {
        if *m > S::zero() {
            sum += (p.widen() - m.widen()).abs();
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

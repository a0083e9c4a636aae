//! Paired-fixture generation: seeded random scenes rendered into
//! (appearance image, range image, dense target mask) triples — the
//! desk-scale stand-in for a real RGB+LiDAR capture rig.

use crate::densify::build_dense_mask;
use crate::scene::{
    default_palette, random_scene, render_frame, AxisBox, Material, Scene,
};
use crate::types::{
    AppearanceImage, CameraModel, DenseIntensityMask, RangeImage, SensorConfig, ValidationError,
};
use crate::Real;

/// Everything that defines a dataset family: the rig (sensor + camera), the
/// sampling volume, and the palette. Individual samples differ only by
/// seed.
#[derive(Debug, Clone)]
pub struct DatasetSpec<S> {
    pub sensor: SensorConfig<S>,
    pub camera: CameraModel<S>,
    /// Axis-aligned volume the random boxes are sampled inside.
    pub bounds: ([S; 3], [S; 3]),
    /// Inclusive range of boxes per scene.
    pub box_count: (usize, usize),
    pub palette: Vec<Material<S>>,
    /// Optional far wall (min/max corners) appended to every scene with a
    /// seed-chosen opaque material, so the sensor's whole field of view has
    /// geometry behind the random boxes.
    pub backdrop: Option<([S; 3], [S; 3])>,
}

impl<S: Real> DatasetSpec<S> {
    /// The desk-scale rig: a 128×64 camera and a 32×64 sensor, co-located
    /// at the origin and covering the same forward cone, with random boxes
    /// 8–26 m out and a far wall closing the background. The narrow cone
    /// keeps incidence angles on frontal faces small, so the intensity a
    /// colour implies is nearly constant — the property that makes the
    /// mapping learnable from appearance alone.
    pub fn desk() -> Self {
        // The camera's horizontal half-angle with fx = 1.5·width is
        // atan(1/3); the sensor matches it exactly so the two views align.
        let half_az = (1.0f64 / 3.0).atan();
        let half_elev = 8.9f64.to_radians();
        let sensor = SensorConfig::new(
            "desk32x64",
            32,
            64,
            S::of(-half_elev),
            S::of(half_elev),
            S::of(-half_az),
            S::of(half_az),
            S::of(40.0),
        )
        .expect("desk sensor constants are valid");
        let camera = CameraModel::new(
            128,
            64,
            S::of(192.0),
            S::of(192.0),
            S::of(64.0),
            S::of(32.0),
            *CameraModel::<S>::default_for(128, 64).rotation(),
            [S::zero(); 3],
        )
        .expect("desk camera constants are valid");
        Self {
            sensor,
            camera,
            bounds: (
                [S::of(8.0), S::of(-9.0), S::of(-1.2)],
                [S::of(26.0), S::of(9.0), S::of(1.2)],
            ),
            box_count: (4, 9),
            palette: default_palette(),
            backdrop: Some((
                [S::of(29.5), S::of(-10.5), S::of(-6.0)],
                [S::of(30.5), S::of(10.5), S::of(6.0)],
            )),
        }
    }
}

/// One generated training pair plus the scene it came from (kept for
/// oracle-style evaluation).
#[derive(Debug, Clone)]
pub struct Sample<S> {
    pub scene: Scene<S>,
    pub appearance: AppearanceImage<S>,
    pub range_image: RangeImage<S>,
    pub mask: DenseIntensityMask<S>,
}

/// Builds the seeded scene (random boxes, plus the backdrop if configured),
/// renders the paired frame, and densifies the range image into the
/// camera-space target mask. Identical seeds give identical samples.
pub fn generate_sample<S: Real>(
    spec: &DatasetSpec<S>,
    seed: u64,
) -> Result<Sample<S>, ValidationError> {
    let mut scene = random_scene(seed, spec.bounds, spec.box_count, &spec.palette)?;
    if let Some((min, max)) = spec.backdrop {
        let opaque: Vec<usize> = scene
            .materials()
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.transparent())
            .map(|(i, _)| i)
            .collect();
        if opaque.is_empty() {
            return Err(ValidationError::field(
                "DatasetSpec",
                "palette",
                "a backdrop needs at least one opaque material",
            ));
        }
        let material = opaque[(seed % opaque.len() as u64) as usize];
        let mut boxes = scene.boxes().to_vec();
        boxes.push(AxisBox { min, max, material });
        scene = Scene::new(scene.materials().to_vec(), 0, boxes)?;
    }
    let (appearance, range_image) = render_frame(&scene, &spec.sensor, &spec.camera);
    let mask = build_dense_mask(&range_image, &spec.sensor, &spec.camera);
    Ok(Sample {
        scene,
        appearance,
        range_image,
        mask,
    })
}

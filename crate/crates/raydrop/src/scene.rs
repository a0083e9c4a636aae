//! Analytic scene oracle: a ground plane plus axis-aligned boxes with
//! physically flavoured materials.
//!
//! The oracle produces paired data with known ground truth: an RGB
//! appearance image (base colours, no shading) and a LiDAR range image
//! where transparent surfaces swallow rays (no return) and opaque surfaces
//! return `rho * cos(incidence)`. Colours map one-to-one to materials, so
//! appearance fully determines LiDAR behaviour — the property the learned
//! predictor relies on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::bin_center_direction;
use crate::io::config::{
    parse_config, validate_schema, ConfigError, ConfigFile, KeySchema, SectionSchema, ValueKind,
};
use crate::types::{
    AppearanceImage, CameraModel, RangeImage, SensorConfig, ValidationError,
};
use crate::Real;

/// Surface material: RGB base colour, LiDAR reflectivity `rho`, and whether
/// rays pass through without a return (glass).
#[derive(Debug, Clone, PartialEq)]
pub struct Material<S> {
    name: String,
    color: [S; 3],
    rho: S,
    transparent: bool,
}

impl<S: Real> Material<S> {
    pub fn new(
        name: impl Into<String>,
        color: [S; 3],
        rho: S,
        transparent: bool,
    ) -> Result<Self, ValidationError> {
        const T: &str = "Material";
        let name = name.into();
        if name.is_empty() {
            return Err(ValidationError::field(T, "name", "must not be empty"));
        }
        for &c in &color {
            if !c.is_finite() || c < S::zero() || c > S::one() {
                return Err(ValidationError::field(
                    T,
                    "color",
                    format!("components must lie in [0, 1], got {c}"),
                ));
            }
        }
        if !rho.is_finite() || rho < S::zero() || rho > S::one() {
            return Err(ValidationError::field(
                T,
                "rho",
                format!("must lie in [0, 1], got {rho}"),
            ));
        }
        Ok(Self {
            name,
            color,
            rho,
            transparent,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn color(&self) -> [S; 3] {
        self.color
    }

    pub fn rho(&self) -> S {
        self.rho
    }

    pub fn transparent(&self) -> bool {
        self.transparent
    }
}

/// Axis-aligned box with a material from the scene palette.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox<S> {
    pub min: [S; 3],
    pub max: [S; 3],
    pub material: usize,
}

/// Ground plane at `z = 0` plus axis-aligned boxes. The palette is
/// bijective: material names and colours are unique, so colour identifies
/// material.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene<S> {
    materials: Vec<Material<S>>,
    ground_material: usize,
    boxes: Vec<AxisBox<S>>,
}

impl<S: Real> Scene<S> {
    pub fn new(
        materials: Vec<Material<S>>,
        ground_material: usize,
        boxes: Vec<AxisBox<S>>,
    ) -> Result<Self, ValidationError> {
        const T: &str = "Scene";
        if materials.is_empty() {
            return Err(ValidationError::field(
                T,
                "materials",
                "palette must not be empty",
            ));
        }
        for i in 0..materials.len() {
            for j in i + 1..materials.len() {
                if materials[i].name == materials[j].name {
                    return Err(ValidationError::field(
                        T,
                        "materials",
                        format!("duplicate material name {:?}", materials[i].name),
                    ));
                }
                if materials[i].color == materials[j].color {
                    return Err(ValidationError::field(
                        T,
                        "materials",
                        format!(
                            "materials {:?} and {:?} share a colour; the palette must map \
                             colours to materials one-to-one",
                            materials[i].name, materials[j].name
                        ),
                    ));
                }
            }
        }
        if ground_material >= materials.len() {
            return Err(ValidationError::field(
                T,
                "ground_material",
                format!("index {ground_material} out of palette range"),
            ));
        }
        for (i, b) in boxes.iter().enumerate() {
            if b.material >= materials.len() {
                return Err(ValidationError::field(
                    T,
                    "boxes",
                    format!("box {i}: material index {} out of palette range", b.material),
                ));
            }
            for axis in 0..3 {
                let (lo, hi) = (b.min[axis], b.max[axis]);
                if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                    return Err(ValidationError::field(
                        T,
                        "boxes",
                        format!("box {i}: min must be strictly below max per axis"),
                    ));
                }
            }
        }
        Ok(Self {
            materials,
            ground_material,
            boxes,
        })
    }

    pub fn materials(&self) -> &[Material<S>] {
        &self.materials
    }

    pub fn ground_material(&self) -> &Material<S> {
        &self.materials[self.ground_material]
    }

    pub fn boxes(&self) -> &[AxisBox<S>] {
        &self.boxes
    }
}

/// A ray-surface intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit<S> {
    /// Distance along the (unit) ray direction.
    pub distance: S,
    /// Unit surface normal oriented against the ray (`normal · dir < 0`).
    pub normal: [S; 3],
    /// Index into the scene palette.
    pub material: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("ray direction must be unit length, |d| = {norm}")]
    NonUnitDirection { norm: f64 },
}

/// Intersections closer than this are ignored so a ray never re-hits the
/// surface it starts on.
const MIN_HIT_DISTANCE: f64 = 1e-9;

/// Casts a ray and returns the nearest surface within `max_range`, if any.
/// The direction must be unit length (checked at a tolerance that scales
/// with the scalar's epsilon: 1e-9 at f64).
pub fn raycast<S: Real>(
    scene: &Scene<S>,
    origin: [S; 3],
    direction: [S; 3],
    max_range: S,
) -> Result<Option<Hit<S>>, SceneError> {
    let norm = (direction[0].widen().powi(2)
        + direction[1].widen().powi(2)
        + direction[2].widen().powi(2))
    .sqrt();
    let tol = (S::epsilon().widen() * 100.0).max(1e-9);
    if (norm - 1.0).abs() > tol {
        return Err(SceneError::NonUnitDirection { norm });
    }
    Ok(raycast_unchecked(scene, origin, direction, max_range))
}

/// `raycast` without the unit-direction check, for render loops that build
/// normalized directions themselves.
fn raycast_unchecked<S: Real>(
    scene: &Scene<S>,
    origin: [S; 3],
    direction: [S; 3],
    max_range: S,
) -> Option<Hit<S>> {
    let eps = S::of(MIN_HIT_DISTANCE);
    let mut best: Option<Hit<S>> = None;
    let mut consider = |hit: Hit<S>| {
        if hit.distance > eps
            && hit.distance <= max_range
            && best.is_none_or(|b| hit.distance < b.distance)
        {
            best = Some(hit);
        }
    };

    // Ground plane z = 0, normal toward the ray origin's side.
    if direction[2] != S::zero() {
        let t = -origin[2] / direction[2];
        if t.is_finite() {
            let up = origin[2] > S::zero();
            consider(Hit {
                distance: t,
                normal: [
                    S::zero(),
                    S::zero(),
                    if up { S::one() } else { -S::one() },
                ],
                material: scene.ground_material,
            });
        }
    }

    for b in &scene.boxes {
        if let Some(hit) = intersect_box(b, origin, direction, eps) {
            consider(hit);
        }
    }
    best
}

/// Slab test against one axis-aligned box. Returns the first surface the ray
/// pierces after `eps`: the entry face from outside, or the inner side of
/// the exit face when the origin is inside.
fn intersect_box<S: Real>(
    b: &AxisBox<S>,
    origin: [S; 3],
    direction: [S; 3],
    eps: S,
) -> Option<Hit<S>> {
    let mut t_near = S::neg_infinity();
    let mut t_far = S::infinity();
    let mut near_axis = 0usize;
    let mut far_axis = 0usize;
    for axis in 0..3 {
        let d = direction[axis];
        if d == S::zero() {
            if origin[axis] < b.min[axis] || origin[axis] > b.max[axis] {
                return None;
            }
            continue;
        }
        let inv = S::one() / d;
        let (t1, t2) = {
            let ta = (b.min[axis] - origin[axis]) * inv;
            let tb = (b.max[axis] - origin[axis]) * inv;
            if ta < tb {
                (ta, tb)
            } else {
                (tb, ta)
            }
        };
        if t1 > t_near {
            t_near = t1;
            near_axis = axis;
        }
        if t2 < t_far {
            t_far = t2;
            far_axis = axis;
        }
        if t_near > t_far {
            return None;
        }
    }
    let mut normal = [S::zero(); 3];
    if t_near > eps {
        // Entry face: outward normal opposes the ray on that axis.
        normal[near_axis] = if direction[near_axis] > S::zero() {
            -S::one()
        } else {
            S::one()
        };
        Some(Hit {
            distance: t_near,
            normal,
            material: b.material,
        })
    } else if t_far > eps {
        // Origin inside: the ray hits the inner side of the exit face.
        normal[far_axis] = if direction[far_axis] > S::zero() {
            -S::one()
        } else {
            S::one()
        };
        Some(Hit {
            distance: t_far,
            normal,
            material: b.material,
        })
    } else {
        None
    }
}

/// LiDAR return strength for a hit: `None` for transparent surfaces (the ray
/// passes; physical raydrop), otherwise `rho * max(0, -normal . direction)`
/// clamped into `[0, 1]`. There is no distance falloff; see
/// [`apply_inverse_square_falloff`] for the optional model.
pub fn lidar_intensity<S: Real>(
    scene: &Scene<S>,
    hit: &Hit<S>,
    direction: [S; 3],
) -> Option<S> {
    let material = &scene.materials[hit.material];
    if material.transparent {
        return None;
    }
    let cos = -(hit.normal[0] * direction[0]
        + hit.normal[1] * direction[1]
        + hit.normal[2] * direction[2]);
    Some((material.rho() * cos.max(S::zero())).min(S::one()))
}

/// Optional inverse-square distance falloff, normalized to 1 at
/// `reference_distance`; disabled by default because the flat law keeps the
/// oracle's intensity scale independent of scene layout.
pub fn apply_inverse_square_falloff<S: Real>(
    intensity: S,
    distance: S,
    reference_distance: S,
) -> S {
    let scaled = intensity * (reference_distance / distance).powi(2);
    scaled.min(S::one())
}

/// Renders the paired ground-truth frame seen from the sensor origin: the
/// RGB appearance image through `cam` (base colours, black background, no
/// range limit) and the realistic LiDAR range image (transparent surfaces
/// produce no return).
pub fn render_frame<S: Real>(
    scene: &Scene<S>,
    cfg: &SensorConfig<S>,
    cam: &CameraModel<S>,
) -> (AppearanceImage<S>, RangeImage<S>) {
    (render_appearance(scene, cam), render_range_image(scene, cfg, false))
}

/// The realistic LiDAR view: per cell the nearest opaque hit within range.
pub fn render_range_image<S: Real>(
    scene: &Scene<S>,
    cfg: &SensorConfig<S>,
    treat_all_opaque: bool,
) -> RangeImage<S> {
    let origin = [S::zero(); 3];
    let mut image = RangeImage::new(cfg.rows(), cfg.cols());
    for row in 0..cfg.rows() {
        for col in 0..cfg.cols() {
            let dir = bin_center_direction(cfg, row, col);
            if let Some(hit) = raycast_unchecked(scene, origin, dir, cfg.max_range()) {
                if treat_all_opaque {
                    image.set_return(row, col, hit.distance, S::zero());
                } else if let Some(intensity) = lidar_intensity(scene, &hit, dir) {
                    image.set_return(row, col, hit.distance, intensity);
                }
            }
        }
    }
    image
}

/// What a naive simulator would output: every geometric first hit becomes a
/// return (transparency ignored) and intensity is unknown (zero).
pub fn render_clean_range_image<S: Real>(scene: &Scene<S>, cfg: &SensorConfig<S>) -> RangeImage<S> {
    render_range_image(scene, cfg, true)
}

/// Per-pixel camera raycast returning base colours; background stays black.
pub fn render_appearance<S: Real>(scene: &Scene<S>, cam: &CameraModel<S>) -> AppearanceImage<S> {
    let mut image = AppearanceImage::black(cam.height(), cam.width());
    let origin = cam.to_sensor_frame([S::zero(); 3]);
    for row in 0..cam.height() {
        for col in 0..cam.width() {
            let dc = [
                (S::of_usize(col) - cam.cx()) / cam.fx(),
                (S::of_usize(row) - cam.cy()) / cam.fy(),
                S::one(),
            ];
            let norm = (dc[0] * dc[0] + dc[1] * dc[1] + dc[2] * dc[2]).sqrt();
            let dir = cam.direction_to_sensor_frame([dc[0] / norm, dc[1] / norm, dc[2] / norm]);
            if let Some(hit) = raycast_unchecked(scene, origin, dir, S::infinity()) {
                image.set_rgb(row, col, scene.materials[hit.material].color());
            }
        }
    }
    image
}

/// Six distinct materials, one transparent. Reflectivity is deliberately
/// uncorrelated with colour brightness so a predictor must learn the palette
/// rather than copy luminance.
pub fn default_palette<S: Real>() -> Vec<Material<S>> {
    let m = |name: &str, r: f64, g: f64, b: f64, rho: f64, transparent: bool| {
        Material::new(name, [S::of(r), S::of(g), S::of(b)], S::of(rho), transparent)
            .expect("palette constants are valid")
    };
    vec![
        m("slate", 0.45, 0.50, 0.55, 0.30, false),
        m("brick", 0.70, 0.25, 0.15, 0.85, false),
        m("moss", 0.20, 0.65, 0.30, 0.15, false),
        m("sand", 0.85, 0.75, 0.45, 0.55, false),
        m("steel", 0.30, 0.35, 0.80, 0.95, false),
        m("glass", 0.30, 0.80, 0.90, 0.40, true),
    ]
}

/// Samples a random scene: `box_count` boxes (inclusive range) with uniform
/// positions and sizes inside `bounds`, materials drawn uniformly from the
/// palette, ground using palette entry 0. Identical seeds produce identical
/// scenes.
pub fn random_scene<S: Real>(
    seed: u64,
    bounds: ([S; 3], [S; 3]),
    box_count: (usize, usize),
    palette: &[Material<S>],
) -> Result<Scene<S>, ValidationError> {
    const T: &str = "random_scene";
    let (lo, hi) = bounds;
    for axis in 0..3 {
        if !(hi[axis] > lo[axis]) {
            return Err(ValidationError::field(
                T,
                "bounds",
                format!("axis {axis}: min must be strictly below max"),
            ));
        }
    }
    if box_count.0 > box_count.1 {
        return Err(ValidationError::field(
            T,
            "box_count",
            "range start exceeds range end",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(box_count.0..=box_count.1);
    let mut boxes = Vec::with_capacity(count);
    for _ in 0..count {
        let mut bmin = [S::zero(); 3];
        let mut bmax = [S::zero(); 3];
        for axis in 0..3 {
            let extent = (hi[axis] - lo[axis]).widen();
            // Side lengths span 10%..40% of the bound extent; the box always
            // fits inside the bounds.
            let size = extent * rng.gen_range(0.1..0.4);
            let start = rng.gen_range(0.0..(extent - size));
            bmin[axis] = lo[axis] + S::of(start);
            bmax[axis] = lo[axis] + S::of(start + size);
        }
        let material = rng.gen_range(0..palette.len());
        boxes.push(AxisBox {
            min: bmin,
            max: bmax,
            material,
        });
    }
    Scene::new(palette.to_vec(), 0, boxes)
}

/// Scene plus the optional sensor and camera blocks of a scene file.
#[derive(Debug, Clone)]
pub struct SceneDescription<S> {
    pub scene: Scene<S>,
    pub sensor: Option<SensorConfig<S>>,
    pub camera: Option<CameraModel<S>>,
}

#[derive(Debug, Error)]
pub enum SceneFileError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: unknown material {name:?}")]
    UnknownMaterial { line: usize, name: String },
    #[error("[sensor] needs either `preset` or the explicit geometry keys")]
    IncompleteSensor,
}

const MATERIAL_KEYS: &[KeySchema] = &[
    KeySchema {
        name: "name",
        kind: ValueKind::Text,
        range: None,
        required: true,
    },
    KeySchema {
        name: "color",
        kind: ValueKind::Triple,
        range: Some((0.0, 1.0)),
        required: true,
    },
    KeySchema {
        name: "rho",
        kind: ValueKind::Number,
        range: Some((0.0, 1.0)),
        required: true,
    },
    KeySchema {
        name: "transparent",
        kind: ValueKind::Bool,
        range: None,
        required: false,
    },
];

const BOX_KEYS: &[KeySchema] = &[
    KeySchema {
        name: "min",
        kind: ValueKind::Triple,
        range: None,
        required: true,
    },
    KeySchema {
        name: "max",
        kind: ValueKind::Triple,
        range: None,
        required: true,
    },
    KeySchema {
        name: "material",
        kind: ValueKind::Text,
        range: None,
        required: true,
    },
];

const GROUND_KEYS: &[KeySchema] = &[KeySchema {
    name: "material",
    kind: ValueKind::Text,
    range: None,
    required: true,
}];

const SENSOR_KEYS: &[KeySchema] = &[
    KeySchema {
        name: "preset",
        kind: ValueKind::Text,
        range: None,
        required: false,
    },
    KeySchema {
        name: "rows",
        kind: ValueKind::Number,
        range: Some((1.0, 1e6)),
        required: false,
    },
    KeySchema {
        name: "cols",
        kind: ValueKind::Number,
        range: Some((1.0, 1e6)),
        required: false,
    },
    KeySchema {
        name: "elev_min_deg",
        kind: ValueKind::Number,
        range: Some((-90.0, 90.0)),
        required: false,
    },
    KeySchema {
        name: "elev_max_deg",
        kind: ValueKind::Number,
        range: Some((-90.0, 90.0)),
        required: false,
    },
    KeySchema {
        name: "az_min_deg",
        kind: ValueKind::Number,
        range: Some((-360.0, 360.0)),
        required: false,
    },
    KeySchema {
        name: "az_max_deg",
        kind: ValueKind::Number,
        range: Some((-360.0, 360.0)),
        required: false,
    },
    KeySchema {
        name: "max_range",
        kind: ValueKind::Number,
        range: Some((1e-6, 1e9)),
        required: false,
    },
];

const CAMERA_KEYS: &[KeySchema] = &[
    KeySchema {
        name: "width",
        kind: ValueKind::Number,
        range: Some((1.0, 65536.0)),
        required: true,
    },
    KeySchema {
        name: "height",
        kind: ValueKind::Number,
        range: Some((1.0, 65536.0)),
        required: true,
    },
    KeySchema {
        name: "fx",
        kind: ValueKind::Number,
        range: Some((1e-6, 1e9)),
        required: false,
    },
    KeySchema {
        name: "fy",
        kind: ValueKind::Number,
        range: Some((1e-6, 1e9)),
        required: false,
    },
    KeySchema {
        name: "cx",
        kind: ValueKind::Number,
        range: Some((-1e6, 1e6)),
        required: false,
    },
    KeySchema {
        name: "cy",
        kind: ValueKind::Number,
        range: Some((-1e6, 1e6)),
        required: false,
    },
];

/// Schema for scene description files.
pub const SCENE_SCHEMA: &[SectionSchema] = &[
    SectionSchema {
        name: "material",
        repeatable: true,
        required: true,
        keys: MATERIAL_KEYS,
    },
    SectionSchema {
        name: "ground",
        repeatable: false,
        required: false,
        keys: GROUND_KEYS,
    },
    SectionSchema {
        name: "box",
        repeatable: true,
        required: false,
        keys: BOX_KEYS,
    },
    SectionSchema {
        name: "sensor",
        repeatable: false,
        required: false,
        keys: SENSOR_KEYS,
    },
    SectionSchema {
        name: "camera",
        repeatable: false,
        required: false,
        keys: CAMERA_KEYS,
    },
];

/// Builds a scene (plus optional sensor/camera) from a parsed config file.
pub fn scene_from_config<S: Real>(file: &ConfigFile) -> Result<SceneDescription<S>, SceneFileError> {
    validate_schema(file, SCENE_SCHEMA)?;

    let mut materials: Vec<Material<S>> = Vec::new();
    for section in file.sections_named("material") {
        let name = section.require_text("name")?;
        let color = section.require_triple("color")?;
        let rho = section.require_number("rho")?;
        let transparent = section.bool("transparent")?.unwrap_or(false);
        materials.push(Material::new(
            name,
            [S::of(color[0]), S::of(color[1]), S::of(color[2])],
            S::of(rho),
            transparent,
        )?);
    }

    let find_material = |section_name: &str, line: usize, name: &str| {
        materials
            .iter()
            .position(|m| m.name() == name)
            .ok_or_else(|| SceneFileError::UnknownMaterial {
                line,
                name: format!("{name} (referenced from [{section_name}])"),
            })
    };

    let ground_material = match file.section("ground") {
        Some(section) => {
            let name = section.require_text("material")?;
            find_material("ground", section.line, name)?
        }
        None => 0,
    };

    let mut boxes = Vec::new();
    for section in file.sections_named("box") {
        let min = section.require_triple("min")?;
        let max = section.require_triple("max")?;
        let name = section.require_text("material")?;
        let material = find_material("box", section.line, name)?;
        boxes.push(AxisBox {
            min: [S::of(min[0]), S::of(min[1]), S::of(min[2])],
            max: [S::of(max[0]), S::of(max[1]), S::of(max[2])],
            material,
        });
    }

    let sensor = match file.section("sensor") {
        None => None,
        Some(section) => Some(match section.text("preset")? {
            Some(preset) => SensorConfig::preset(preset)?,
            None => {
                let all = [
                    section.usize("rows")?,
                    section.usize("cols")?,
                ];
                let angles = [
                    section.number("elev_min_deg")?,
                    section.number("elev_max_deg")?,
                    section.number("az_min_deg")?,
                    section.number("az_max_deg")?,
                    section.number("max_range")?,
                ];
                if all.iter().any(Option::is_none) || angles.iter().any(Option::is_none) {
                    return Err(SceneFileError::IncompleteSensor);
                }
                SensorConfig::new(
                    "custom",
                    all[0].unwrap(),
                    all[1].unwrap(),
                    S::of(angles[0].unwrap().to_radians()),
                    S::of(angles[1].unwrap().to_radians()),
                    S::of(angles[2].unwrap().to_radians()),
                    S::of(angles[3].unwrap().to_radians()),
                    S::of(angles[4].unwrap()),
                )?
            }
        }),
    };

    let camera = match file.section("camera") {
        None => None,
        Some(section) => {
            let width = section.require_usize("width")?;
            let height = section.require_usize("height")?;
            let default = CameraModel::<S>::default_for(width, height);
            let fx = section.number("fx")?.map(S::of).unwrap_or(default.fx());
            let fy = section.number("fy")?.map(S::of).unwrap_or(default.fy());
            let cx = section.number("cx")?.map(S::of).unwrap_or(default.cx());
            let cy = section.number("cy")?.map(S::of).unwrap_or(default.cy());
            Some(CameraModel::new(
                width,
                height,
                fx,
                fy,
                cx,
                cy,
                *default.rotation(),
                *default.translation(),
            )?)
        }
    };

    let scene = Scene::new(materials, ground_material, boxes)?;
    Ok(SceneDescription {
        scene,
        sensor,
        camera,
    })
}

/// Reads and builds a scene description file.
pub fn load_scene_file<S: Real>(path: &std::path::Path) -> Result<SceneDescription<S>, SceneFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| SceneFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file = parse_config(&text)?;
    scene_from_config(&file)
}

//! Value types shared by every stage of the toolkit.
//!
//! All constructors validate their invariants and reject bad data with a
//! [`ValidationError`] naming the offending field; downstream code can then
//! assume the invariants hold.

use thiserror::Error;

use crate::{Grid, Real, Tensor};

/// Violated construction-time invariant.
#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("{type_name}.{field}: {message}")]
    Field {
        type_name: &'static str,
        field: &'static str,
        message: String,
    },
}

impl ValidationError {
    pub(crate) fn field(
        type_name: &'static str,
        field: &'static str,
        message: impl Into<String>,
    ) -> Self {
        Self::Field {
            type_name,
            field,
            message: message.into(),
        }
    }
}

fn require_finite<S: Real>(
    type_name: &'static str,
    field: &'static str,
    value: S,
) -> Result<(), ValidationError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ValidationError::field(
            type_name,
            field,
            format!("must be finite, got {value}"),
        ))
    }
}

fn require_unit_interval<S: Real>(
    type_name: &'static str,
    field: &'static str,
    value: S,
) -> Result<(), ValidationError> {
    require_finite(type_name, field, value)?;
    if value < S::zero() || value > S::one() {
        return Err(ValidationError::field(
            type_name,
            field,
            format!("must lie in [0, 1], got {value}"),
        ));
    }
    Ok(())
}

/// Polar range-image geometry of a spinning LiDAR.
///
/// Row 0 holds the highest elevation; columns sweep azimuth from `az_min`.
/// Angles are radians, distances metres.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorConfig<S> {
    name: String,
    rows: usize,
    cols: usize,
    elev_min: S,
    elev_max: S,
    az_min: S,
    az_max: S,
    max_range: S,
}

impl<S: Real> SensorConfig<S> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        elev_min: S,
        elev_max: S,
        az_min: S,
        az_max: S,
        max_range: S,
    ) -> Result<Self, ValidationError> {
        const T: &str = "SensorConfig";
        if rows == 0 {
            return Err(ValidationError::field(T, "rows", "must be positive"));
        }
        if cols == 0 {
            return Err(ValidationError::field(T, "cols", "must be positive"));
        }
        for (field, v) in [
            ("elev_min", elev_min),
            ("elev_max", elev_max),
            ("az_min", az_min),
            ("az_max", az_max),
            ("max_range", max_range),
        ] {
            require_finite(T, field, v)?;
        }
        if elev_min >= elev_max {
            return Err(ValidationError::field(
                T,
                "elev_min",
                format!("must be below elev_max, got [{elev_min}, {elev_max}]"),
            ));
        }
        if az_min >= az_max {
            return Err(ValidationError::field(
                T,
                "az_min",
                format!("must be below az_max, got [{az_min}, {az_max}]"),
            ));
        }
        // Allow a hair over 2π so that symbolic full-circle configs built in
        // f32 do not trip on representation error.
        if (az_max - az_min).widen() > 2.0 * std::f64::consts::PI + 1e-9 {
            return Err(ValidationError::field(
                T,
                "az_max",
                "azimuth span must not exceed a full circle",
            ));
        }
        if max_range <= S::zero() {
            return Err(ValidationError::field(
                T,
                "max_range",
                format!("must be positive, got {max_range}"),
            ));
        }
        Ok(Self {
            name: name.into(),
            rows,
            cols,
            elev_min,
            elev_max,
            az_min,
            az_max,
            max_range,
        })
    }

    /// Named factory presets.
    ///
    /// Both presets centre their vertical field of view on the horizon; real
    /// mounts tilt it, so treat the centring as a documented preset property
    /// and build a custom config when it matters. Azimuth covers the full
    /// circle at 2048 columns.
    ///
    /// | name      | rows | vertical FoV | max range |
    /// |-----------|------|--------------|-----------|
    /// | `waymo64` | 64   | 50°          | 75 m      |
    /// | `kitti64` | 64   | 27°          | 80 m      |
    pub fn preset(name: &str) -> Result<Self, ValidationError> {
        let deg = |d: f64| S::of(d.to_radians());
        match name {
            "waymo64" => Self::new(
                "waymo64",
                64,
                2048,
                deg(-25.0),
                deg(25.0),
                -S::PI(),
                S::PI(),
                S::of(75.0),
            ),
            "kitti64" => Self::new(
                "kitti64",
                64,
                2048,
                deg(-13.5),
                deg(13.5),
                -S::PI(),
                S::PI(),
                S::of(80.0),
            ),
            other => Err(ValidationError::field(
                "SensorConfig",
                "preset",
                format!("unknown preset {other:?}; known: waymo64, kitti64"),
            )),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn elev_min(&self) -> S {
        self.elev_min
    }

    pub fn elev_max(&self) -> S {
        self.elev_max
    }

    pub fn az_min(&self) -> S {
        self.az_min
    }

    pub fn az_max(&self) -> S {
        self.az_max
    }

    pub fn max_range(&self) -> S {
        self.max_range
    }

    /// Elevation covered by one row.
    pub fn delta_elev(&self) -> S {
        (self.elev_max - self.elev_min) / S::of_usize(self.rows)
    }

    /// Azimuth covered by one column.
    pub fn delta_az(&self) -> S {
        (self.az_max - self.az_min) / S::of_usize(self.cols)
    }

    /// Whether the azimuth span closes the full circle, so the last column
    /// neighbours the first.
    pub fn wraps(&self) -> bool {
        ((self.az_max - self.az_min).widen() - 2.0 * std::f64::consts::PI).abs() <= 1e-9
    }

    /// Centre angles `(elevation, azimuth)` of cell `(row, col)`.
    pub fn bin_center(&self, row: usize, col: usize) -> (S, S) {
        assert!(row < self.rows && col < self.cols, "cell out of range");
        let half = S::of(0.5);
        let elev = self.elev_max - (S::of_usize(row) + half) * self.delta_elev();
        let az = self.az_min + (S::of_usize(col) + half) * self.delta_az();
        (elev, az)
    }
}

/// Polar grid of LiDAR returns: per cell a depth (Euclidean metres, `0` = no
/// return) and an intensity in `[0, 1]` (forced to `0` where there is no
/// return).
#[derive(Debug, Clone, PartialEq)]
pub struct RangeImage<S> {
    depth: Grid<S>,
    intensity: Grid<S>,
}

impl<S: Real> RangeImage<S> {
    /// All-empty image.
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            depth: Grid::filled(rows, cols, S::zero()),
            intensity: Grid::filled(rows, cols, S::zero()),
        }
    }

    /// Wraps raw grids, validating the per-cell invariants.
    pub fn from_grids(depth: Grid<S>, intensity: Grid<S>) -> Result<Self, ValidationError> {
        const T: &str = "RangeImage";
        if !depth.same_shape(&intensity) {
            return Err(ValidationError::field(
                T,
                "intensity",
                format!(
                    "shape {}x{} does not match depth {}x{}",
                    intensity.rows(),
                    intensity.cols(),
                    depth.rows(),
                    depth.cols()
                ),
            ));
        }
        for (r, c, &d) in depth.enumerate() {
            let i = *intensity.get(r, c);
            if !d.is_finite() || d < S::zero() {
                return Err(ValidationError::field(
                    T,
                    "depth",
                    format!("cell ({r}, {c}): must be finite and non-negative, got {d}"),
                ));
            }
            if !i.is_finite() || i < S::zero() || i > S::one() {
                return Err(ValidationError::field(
                    T,
                    "intensity",
                    format!("cell ({r}, {c}): must lie in [0, 1], got {i}"),
                ));
            }
            if d == S::zero() && i != S::zero() {
                return Err(ValidationError::field(
                    T,
                    "intensity",
                    format!("cell ({r}, {c}): non-zero intensity {i} without a return"),
                ));
            }
        }
        Ok(Self { depth, intensity })
    }

    pub fn rows(&self) -> usize {
        self.depth.rows()
    }

    pub fn cols(&self) -> usize {
        self.depth.cols()
    }

    pub fn depth(&self) -> &Grid<S> {
        &self.depth
    }

    pub fn intensity(&self) -> &Grid<S> {
        &self.intensity
    }

    pub fn has_return(&self, row: usize, col: usize) -> bool {
        *self.depth.get(row, col) > S::zero()
    }

    /// Writes a return. Panics on values that would break the invariants;
    /// callers produce them from already-validated data.
    pub fn set_return(&mut self, row: usize, col: usize, depth: S, intensity: S) {
        assert!(
            depth.is_finite() && depth > S::zero(),
            "return depth must be finite and positive"
        );
        assert!(
            intensity.is_finite() && intensity >= S::zero() && intensity <= S::one(),
            "return intensity must lie in [0, 1]"
        );
        self.depth.set(row, col, depth);
        self.intensity.set(row, col, intensity);
    }

    pub fn clear_return(&mut self, row: usize, col: usize) {
        self.depth.set(row, col, S::zero());
        self.intensity.set(row, col, S::zero());
    }

    /// Iterates `(row, col, depth, intensity)` over cells with a return, in
    /// row-major order.
    pub fn returns(&self) -> impl Iterator<Item = (usize, usize, S, S)> + '_ {
        self.depth
            .enumerate()
            .filter(|(_, _, &d)| d > S::zero())
            .map(|(r, c, &d)| (r, c, d, *self.intensity.get(r, c)))
    }

    pub fn count_returns(&self) -> usize {
        self.depth.data().iter().filter(|&&d| d > S::zero()).count()
    }
}

/// Checks a range image against a sensor config; violations are data, not
/// faults, so they come back as a list of human-readable strings (empty =
/// valid).
pub fn validate_range_image<S: Real>(image: &RangeImage<S>, cfg: &SensorConfig<S>) -> Vec<String> {
    let mut violations = Vec::new();
    if image.rows() != cfg.rows() || image.cols() != cfg.cols() {
        violations.push(format!(
            "shape {}x{} does not match sensor config {}x{}",
            image.rows(),
            image.cols(),
            cfg.rows(),
            cfg.cols()
        ));
    }
    for (r, c, &d) in image.depth().enumerate() {
        let i = *image.intensity().get(r, c);
        if !d.is_finite() || d < S::zero() {
            violations.push(format!("depth at ({r}, {c}) is {d}, not finite non-negative"));
        } else if d > cfg.max_range() {
            violations.push(format!(
                "depth {d} at ({r}, {c}) exceeds max range {}",
                cfg.max_range()
            ));
        }
        if !i.is_finite() || i < S::zero() || i > S::one() {
            violations.push(format!("intensity at ({r}, {c}) is {i}, outside [0, 1]"));
        } else if d == S::zero() && i != S::zero() {
            violations.push(format!("intensity {i} without return at ({r}, {c})"));
        }
    }
    violations
}

/// One LiDAR return in the sensor frame (metres; intensity in `[0, 1]`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<S> {
    pub x: S,
    pub y: S,
    pub z: S,
    pub intensity: S,
}

impl<S: Real> Point<S> {
    pub fn new(x: S, y: S, z: S, intensity: S) -> Result<Self, ValidationError> {
        const T: &str = "Point";
        require_finite(T, "x", x)?;
        require_finite(T, "y", y)?;
        require_finite(T, "z", z)?;
        require_unit_interval(T, "intensity", intensity)?;
        Ok(Self { x, y, z, intensity })
    }

    /// Euclidean distance from the sensor origin.
    pub fn range(&self) -> S {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Unordered set of returns in the sensor frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud<S> {
    points: Vec<Point<S>>,
}

impl<S: Real> PointCloud<S> {
    pub fn empty() -> Self {
        Self { points: Vec::new() }
    }

    /// Wraps already-constructed points (each `Point` validated on its own
    /// construction, so the cloud as a whole needs no further checks).
    pub fn from_points(points: Vec<Point<S>>) -> Self {
        Self { points }
    }

    pub fn push(&mut self, point: Point<S>) {
        self.points.push(point);
    }

    pub fn points(&self) -> &[Point<S>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Pinhole camera with an extrinsic transform from the sensor frame.
///
/// `project` maps a sensor-frame point `p` to camera coordinates
/// `R p + t` (camera convention: `+z` forward along the optical axis, `+x`
/// right, `+y` down) and then through the intrinsics. The default extrinsic
/// is the pure axis permutation that points the camera down the sensor's
/// `+x` axis from the sensor origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel<S> {
    width: usize,
    height: usize,
    fx: S,
    fy: S,
    cx: S,
    cy: S,
    rotation: [[S; 3]; 3],
    translation: [S; 3],
}

impl<S: Real> CameraModel<S> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        width: usize,
        height: usize,
        fx: S,
        fy: S,
        cx: S,
        cy: S,
        rotation: [[S; 3]; 3],
        translation: [S; 3],
    ) -> Result<Self, ValidationError> {
        const T: &str = "CameraModel";
        if width == 0 {
            return Err(ValidationError::field(T, "width", "must be positive"));
        }
        if height == 0 {
            return Err(ValidationError::field(T, "height", "must be positive"));
        }
        for (field, v) in [("fx", fx), ("fy", fy)] {
            require_finite(T, field, v)?;
            if v <= S::zero() {
                return Err(ValidationError::field(
                    T,
                    field,
                    format!("must be positive, got {v}"),
                ));
            }
        }
        require_finite(T, "cx", cx)?;
        require_finite(T, "cy", cy)?;
        for row in &rotation {
            for &v in row {
                require_finite(T, "rotation", v)?;
            }
        }
        for &v in &translation {
            require_finite(T, "translation", v)?;
        }
        // R must satisfy RᵀR = I. Tolerance scales with the element type so
        // rotations assembled from f32 trigonometry still validate.
        let tol = S::epsilon().widen() * 100.0;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3)
                    .map(|k| rotation[k][i].widen() * rotation[k][j].widen())
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - expect).abs() > tol {
                    return Err(ValidationError::field(
                        T,
                        "rotation",
                        format!("not orthonormal: column dot ({i}, {j}) = {dot}"),
                    ));
                }
            }
        }
        let det = det3(&rotation);
        if (det - 1.0).abs() > tol {
            return Err(ValidationError::field(
                T,
                "rotation",
                format!("must be a proper rotation (det 1), got det {det}"),
            ));
        }
        Ok(Self {
            width,
            height,
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
        })
    }

    /// Camera at the sensor origin looking along sensor `+x`, focal length
    /// half the image width, principal point at the image centre.
    pub fn default_for(width: usize, height: usize) -> Self {
        let z = S::zero();
        let o = S::one();
        // Sensor frame: +x forward, +y left, +z up. Camera frame: +x right,
        // +y down, +z forward. Rows are camera axes in sensor coordinates.
        let rotation = [[z, -o, z], [z, z, -o], [o, z, z]];
        let f = S::of_usize(width) / S::of(2.0);
        Self::new(
            width,
            height,
            f,
            f,
            S::of_usize(width) / S::of(2.0),
            S::of_usize(height) / S::of(2.0),
            rotation,
            [z, z, z],
        )
        .expect("default camera parameters are valid")
    }

    /// The 512x256 default used by the camera-space pipeline.
    pub fn standard() -> Self {
        Self::default_for(512, 256)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fx(&self) -> S {
        self.fx
    }

    pub fn fy(&self) -> S {
        self.fy
    }

    pub fn cx(&self) -> S {
        self.cx
    }

    pub fn cy(&self) -> S {
        self.cy
    }

    pub fn rotation(&self) -> &[[S; 3]; 3] {
        &self.rotation
    }

    pub fn translation(&self) -> &[S; 3] {
        &self.translation
    }

    /// Applies the extrinsic: sensor frame -> camera frame.
    pub fn to_camera_frame(&self, p: [S; 3]) -> [S; 3] {
        let r = &self.rotation;
        [
            r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2] + self.translation[0],
            r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2] + self.translation[1],
            r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2] + self.translation[2],
        ]
    }

    /// Inverse extrinsic: camera frame -> sensor frame.
    pub fn to_sensor_frame(&self, p: [S; 3]) -> [S; 3] {
        let r = &self.rotation;
        let d = [
            p[0] - self.translation[0],
            p[1] - self.translation[1],
            p[2] - self.translation[2],
        ];
        [
            r[0][0] * d[0] + r[1][0] * d[1] + r[2][0] * d[2],
            r[0][1] * d[0] + r[1][1] * d[1] + r[2][1] * d[2],
            r[0][2] * d[0] + r[1][2] * d[1] + r[2][2] * d[2],
        ]
    }

    /// Rotates a camera-frame direction back into the sensor frame.
    pub fn direction_to_sensor_frame(&self, d: [S; 3]) -> [S; 3] {
        let r = &self.rotation;
        [
            r[0][0] * d[0] + r[1][0] * d[1] + r[2][0] * d[2],
            r[0][1] * d[0] + r[1][1] * d[1] + r[2][1] * d[2],
            r[0][2] * d[0] + r[1][2] * d[1] + r[2][2] * d[2],
        ]
    }
}

fn det3<S: Real>(m: &[[S; 3]; 3]) -> f64 {
    let m = |i: usize, j: usize| m[i][j].widen();
    m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
        - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
}

/// RGB camera image, channel-major, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceImage<S> {
    data: Tensor<S>,
}

impl<S: Real> AppearanceImage<S> {
    pub fn black(height: usize, width: usize) -> Self {
        Self {
            data: Tensor::zeros(3, height, width),
        }
    }

    pub fn from_tensor(data: Tensor<S>) -> Result<Self, ValidationError> {
        const T: &str = "AppearanceImage";
        if data.channels() != 3 {
            return Err(ValidationError::field(
                T,
                "channels",
                format!("must be 3 (RGB), got {}", data.channels()),
            ));
        }
        for &v in data.data() {
            require_unit_interval(T, "pixel", v)?;
        }
        Ok(Self { data })
    }

    pub fn width(&self) -> usize {
        self.data.cols()
    }

    pub fn height(&self) -> usize {
        self.data.rows()
    }

    pub fn tensor(&self) -> &Tensor<S> {
        &self.data
    }

    pub fn rgb(&self, row: usize, col: usize) -> [S; 3] {
        [
            self.data.at(0, row, col),
            self.data.at(1, row, col),
            self.data.at(2, row, col),
        ]
    }

    /// Writes one pixel. Panics outside `[0, 1]`; renderers only produce
    /// palette colours, which are validated at scene construction.
    pub fn set_rgb(&mut self, row: usize, col: usize, rgb: [S; 3]) {
        for (c, &v) in rgb.iter().enumerate() {
            assert!(
                v.is_finite() && v >= S::zero() && v <= S::one(),
                "pixel values must lie in [0, 1]"
            );
            self.data.set(c, row, col, v);
        }
    }
}

/// Camera-space densified LiDAR mask: per pixel the interpolated return
/// intensity (`0` = no surface), optionally paired with the interpolated
/// camera-space depth from the same rasterization.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseIntensityMask<S> {
    values: Grid<S>,
    depth: Option<Grid<S>>,
}

impl<S: Real> DenseIntensityMask<S> {
    pub fn from_parts(values: Grid<S>, depth: Option<Grid<S>>) -> Result<Self, ValidationError> {
        const T: &str = "DenseIntensityMask";
        for (r, c, &v) in values.enumerate() {
            require_unit_interval(T, "values", v).map_err(|_| {
                ValidationError::field(T, "values", format!("cell ({r}, {c}) outside [0, 1]: {v}"))
            })?;
        }
        if let Some(d) = &depth {
            if !d.same_shape(&values) {
                return Err(ValidationError::field(
                    T,
                    "depth",
                    format!(
                        "shape {}x{} does not match values {}x{}",
                        d.rows(),
                        d.cols(),
                        values.rows(),
                        values.cols()
                    ),
                ));
            }
            for (r, c, &v) in d.enumerate() {
                if !v.is_finite() || v < S::zero() {
                    return Err(ValidationError::field(
                        T,
                        "depth",
                        format!("cell ({r}, {c}): must be finite non-negative, got {v}"),
                    ));
                }
                if *values.get(r, c) > S::zero() && v == S::zero() {
                    return Err(ValidationError::field(
                        T,
                        "depth",
                        format!("cell ({r}, {c}): positive mask value without depth"),
                    ));
                }
            }
        }
        Ok(Self { values, depth })
    }

    pub fn width(&self) -> usize {
        self.values.cols()
    }

    pub fn height(&self) -> usize {
        self.values.rows()
    }

    pub fn values(&self) -> &Grid<S> {
        &self.values
    }

    pub fn depth(&self) -> Option<&Grid<S>> {
        self.depth.as_ref()
    }

    /// Binary coverage: which pixels the rasterized mesh touched. Uses the
    /// depth buffer when present (robust to zero-intensity surfaces),
    /// otherwise positive mask values.
    pub fn coverage(&self) -> Grid<bool> {
        match &self.depth {
            Some(d) => d.map(|&v| v > S::zero()),
            None => self.values.map(|&v| v > S::zero()),
        }
    }
}

/// Raydrop and intensity planes predicted for one camera frame, both in
/// `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorOutput<S> {
    raydrop: Grid<S>,
    intensity: Grid<S>,
}

impl<S: Real> PredictorOutput<S> {
    pub fn from_grids(raydrop: Grid<S>, intensity: Grid<S>) -> Result<Self, ValidationError> {
        const T: &str = "PredictorOutput";
        if !raydrop.same_shape(&intensity) {
            return Err(ValidationError::field(
                T,
                "intensity",
                format!(
                    "shape {}x{} does not match raydrop {}x{}",
                    intensity.rows(),
                    intensity.cols(),
                    raydrop.rows(),
                    raydrop.cols()
                ),
            ));
        }
        for (field, grid) in [("raydrop", &raydrop), ("intensity", &intensity)] {
            for (r, c, &v) in grid.enumerate() {
                require_unit_interval(T, field, v).map_err(|_| {
                    ValidationError::field(
                        T,
                        field,
                        format!("cell ({r}, {c}) outside [0, 1]: {v}"),
                    )
                })?;
            }
        }
        Ok(Self { raydrop, intensity })
    }

    pub fn width(&self) -> usize {
        self.raydrop.cols()
    }

    pub fn height(&self) -> usize {
        self.raydrop.rows()
    }

    pub fn raydrop(&self) -> &Grid<S> {
        &self.raydrop
    }

    pub fn intensity(&self) -> &Grid<S> {
        &self.intensity
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Cfg = SensorConfig<f64>;

    #[test]
    fn presets_match_published_geometry() {
        let w: Cfg = SensorConfig::preset("waymo64").unwrap();
        assert_eq!(w.rows(), 64);
        assert!((w.elev_max() - 25f64.to_radians()).abs() < 1e-12);
        assert!((w.elev_min() + 25f64.to_radians()).abs() < 1e-12);
        assert_eq!(w.max_range(), 75.0);
        assert!(w.wraps());

        let k: Cfg = SensorConfig::preset("kitti64").unwrap();
        assert_eq!(k.rows(), 64);
        assert!((k.elev_max() - k.elev_min() - 27f64.to_radians()).abs() < 1e-12);
        assert_eq!(k.max_range(), 80.0);

        assert!(Cfg::preset("hdl32").is_err());
    }

    #[test]
    fn sensor_config_rejects_bad_fields() {
        let mk = |elev_min: f64, elev_max: f64, az_min: f64, az_max: f64, max_range: f64| {
            Cfg::new("t", 4, 8, elev_min, elev_max, az_min, az_max, max_range)
        };
        assert!(mk(-0.1, 0.1, -1.0, 1.0, 10.0).is_ok());
        assert!(mk(0.1, -0.1, -1.0, 1.0, 10.0).is_err());
        assert!(mk(-0.1, 0.1, 1.0, -1.0, 10.0).is_err());
        assert!(mk(-0.1, 0.1, -4.0, 4.0, 10.0).is_err(), "span over 2 pi");
        assert!(mk(-0.1, 0.1, -1.0, 1.0, 0.0).is_err());
        assert!(mk(-0.1, 0.1, -1.0, 1.0, f64::NAN).is_err());
        assert!(Cfg::new("t", 0, 8, -0.1, 0.1, -1.0, 1.0, 10.0).is_err());
    }

    #[test]
    fn bin_center_is_half_a_cell_from_the_edges() {
        let cfg = Cfg::new(
            "t",
            4,
            8,
            (-15f64).to_radians(),
            15f64.to_radians(),
            -std::f64::consts::PI,
            std::f64::consts::PI,
            100.0,
        )
        .unwrap();
        let (elev, az) = cfg.bin_center(0, 0);
        assert!((elev - 11.25f64.to_radians()).abs() < 1e-12);
        assert!((az - (-157.5f64).to_radians()).abs() < 1e-12);
        let (elev, az) = cfg.bin_center(3, 7);
        assert!((elev + 11.25f64.to_radians()).abs() < 1e-12);
        assert!((az - 157.5f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn range_image_invariants_are_enforced() {
        let depth = Grid::from_vec(1, 2, vec![0.0, 5.0]).unwrap();
        let ok = Grid::from_vec(1, 2, vec![0.0, 0.7]).unwrap();
        assert!(RangeImage::from_grids(depth.clone(), ok).is_ok());

        let intensity_without_return = Grid::from_vec(1, 2, vec![0.2, 0.7]).unwrap();
        let err = RangeImage::from_grids(depth.clone(), intensity_without_return).unwrap_err();
        assert!(err.to_string().contains("without a return"), "{err}");

        let negative_depth = Grid::from_vec(1, 2, vec![-1.0, 5.0]).unwrap();
        assert!(
            RangeImage::from_grids(negative_depth, Grid::filled(1, 2, 0.0)).is_err()
        );

        let out_of_range = Grid::from_vec(1, 2, vec![0.0, 1.5]).unwrap();
        assert!(RangeImage::from_grids(depth, out_of_range).is_err());
    }

    #[test]
    fn validate_range_image_reports_max_range_and_shape() {
        let cfg = Cfg::new("t", 2, 2, -0.1, 0.1, -1.0, 1.0, 10.0).unwrap();
        let mut ri = RangeImage::new(2, 2);
        ri.set_return(0, 0, 12.0, 0.5);
        let violations = validate_range_image(&ri, &cfg);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("exceeds max range"));

        let wrong_shape = RangeImage::<f64>::new(1, 2);
        assert!(!validate_range_image(&wrong_shape, &cfg).is_empty());
    }

    #[test]
    fn point_validation() {
        assert!(Point::new(1.0, 2.0, 3.0, 0.5).is_ok());
        assert!(Point::new(f64::INFINITY, 2.0, 3.0, 0.5).is_err());
        assert!(Point::new(1.0, 2.0, 3.0, -0.1).is_err());
        assert!(Point::new(1.0, 2.0, 3.0, 1.1).is_err());
    }

    #[test]
    fn default_camera_is_a_proper_axis_permutation() {
        let cam: CameraModel<f64> = CameraModel::standard();
        assert_eq!(cam.width(), 512);
        assert_eq!(cam.height(), 256);
        assert_eq!(cam.fx(), 256.0);
        assert_eq!(cam.cx(), 256.0);
        assert_eq!(cam.cy(), 128.0);
        // Sensor +x (forward) becomes camera +z (optical axis).
        assert_eq!(cam.to_camera_frame([5.0, 0.0, 0.0]), [0.0, 0.0, 5.0]);
        // Sensor +y (left) becomes camera -x, sensor +z (up) becomes camera -y.
        assert_eq!(cam.to_camera_frame([0.0, 1.0, 0.0]), [-1.0, 0.0, 0.0]);
        assert_eq!(cam.to_camera_frame([0.0, 0.0, 1.0]), [0.0, -1.0, 0.0]);
        // Extrinsic round trip.
        let p = [3.0, -2.0, 1.5];
        let back = cam.to_sensor_frame(cam.to_camera_frame(p));
        for i in 0..3 {
            assert!((back[i] - p[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn camera_rejects_non_rotations() {
        let bad = CameraModel::<f64>::new(
            64,
            64,
            32.0,
            32.0,
            32.0,
            32.0,
            [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]],
            [0.0; 3],
        );
        assert!(bad.is_err());
        // Reflections (det -1) are not rotations.
        let reflect = CameraModel::<f64>::new(
            64,
            64,
            32.0,
            32.0,
            32.0,
            32.0,
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]],
            [0.0; 3],
        );
        assert!(reflect.is_err());
        assert!(CameraModel::<f64>::new(0, 64, 32.0, 32.0, 0.0, 0.0, identity(), [0.0; 3]).is_err());
        assert!(
            CameraModel::<f64>::new(64, 64, -1.0, 32.0, 0.0, 0.0, identity(), [0.0; 3]).is_err()
        );
    }

    fn identity() -> [[f64; 3]; 3] {
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    }

    #[test]
    fn mask_and_predictor_output_validation() {
        let values = Grid::from_vec(1, 2, vec![0.0, 0.5]).unwrap();
        let depth = Grid::from_vec(1, 2, vec![0.0, 3.0]).unwrap();
        assert!(DenseIntensityMask::from_parts(values.clone(), Some(depth)).is_ok());

        let missing_depth = Grid::from_vec(1, 2, vec![0.0, 0.0]).unwrap();
        assert!(DenseIntensityMask::from_parts(values.clone(), Some(missing_depth)).is_err());

        let bad_values = Grid::from_vec(1, 2, vec![0.0, 1.5]).unwrap();
        assert!(DenseIntensityMask::from_parts(bad_values, None).is_err());

        let raydrop = Grid::filled(2, 2, 0.5);
        let intensity = Grid::filled(2, 2, 0.25);
        assert!(PredictorOutput::from_grids(raydrop.clone(), intensity).is_ok());
        let mismatched = Grid::filled(2, 3, 0.25);
        assert!(PredictorOutput::from_grids(raydrop, mismatched).is_err());
    }

    #[test]
    fn coverage_prefers_depth_buffer() {
        // A covered pixel can carry interpolated intensity exactly 0; the
        // depth buffer still marks it covered.
        let values = Grid::from_vec(1, 2, vec![0.0, 0.5]).unwrap();
        let depth = Grid::from_vec(1, 2, vec![2.0, 3.0]).unwrap();
        let mask = DenseIntensityMask::from_parts(values, Some(depth)).unwrap();
        let cov = mask.coverage();
        assert!(*cov.get(0, 0) && *cov.get(0, 1));
    }
}

//! Conversions between point clouds, polar range images, and camera pixels.

use thiserror::Error;

use crate::types::{CameraModel, Point, PointCloud, RangeImage, SensorConfig};
use crate::{Grid, Real};

/// Continuous pixel position paired with camera-space depth. Integer `(u, v)`
/// coincide with sample positions of image grids: `u` runs along columns,
/// `v` along rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord<S> {
    pub u: S,
    pub v: S,
    pub depth: S,
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("sample position ({u}, {v}) outside grid of {rows} rows x {cols} cols")]
    SampleOutOfBounds {
        u: f64,
        v: f64,
        rows: usize,
        cols: usize,
    },
}

/// Camera-space depths at or below this are treated as "behind the camera";
/// projection has no meaningful answer there.
const MIN_CAMERA_DEPTH: f64 = 1e-6;

/// Bins a cloud into the polar grid described by `cfg`.
///
/// Per point: `azimuth = atan2(y, x)`, `elevation = atan2(z, hypot(x, y))`,
/// `row = floor((elev_max - elevation) / delta_elev)`, and
/// `col = floor((azimuth - az_min) / delta_az)`. Points outside the angular
/// bounds or beyond `max_range` are skipped; on full-circle configs the
/// azimuth is folded modulo 2π instead, so `+π` and `-π` land in the same
/// column. When several points bin to one cell the nearest return wins
/// (first written wins exact distance ties).
pub fn pointcloud_to_range_image<S: Real>(
    cloud: &PointCloud<S>,
    cfg: &SensorConfig<S>,
) -> RangeImage<S> {
    let mut image = RangeImage::new(cfg.rows(), cfg.cols());
    let delta_elev = cfg.delta_elev();
    let delta_az = cfg.delta_az();
    let wraps = cfg.wraps();
    for p in cloud.points() {
        let range = p.range();
        if range <= S::zero() || range > cfg.max_range() {
            continue;
        }
        let horizontal = (p.x * p.x + p.y * p.y).sqrt();
        let elevation = p.z.atan2(horizontal);
        let azimuth = p.y.atan2(p.x);

        let row_f = ((cfg.elev_max() - elevation) / delta_elev).floor();
        let row = match row_f.to_i64() {
            Some(r) if r >= 0 && (r as usize) < cfg.rows() => r as usize,
            _ => continue,
        };

        let col_f = ((azimuth - cfg.az_min()) / delta_az).floor();
        let col = match col_f.to_i64() {
            Some(c) if wraps => c.rem_euclid(cfg.cols() as i64) as usize,
            Some(c) if c >= 0 && (c as usize) < cfg.cols() => c as usize,
            _ => continue,
        };

        if !image.has_return(row, col) || range < *image.depth().get(row, col) {
            image.set_return(row, col, range, p.intensity);
        }
    }
    image
}

/// Reconstructs one return per occupied cell, placed along the cell's centre
/// direction at the stored depth, in row-major cell order.
pub fn range_image_to_pointcloud<S: Real>(
    image: &RangeImage<S>,
    cfg: &SensorConfig<S>,
) -> PointCloud<S> {
    let mut points = Vec::with_capacity(image.count_returns());
    for (row, col, depth, intensity) in image.returns() {
        let dir = bin_center_direction(cfg, row, col);
        points.push(Point {
            x: dir[0] * depth,
            y: dir[1] * depth,
            z: dir[2] * depth,
            intensity,
        });
    }
    PointCloud::from_points(points)
}

/// Unit direction through the centre of cell `(row, col)`.
pub fn bin_center_direction<S: Real>(cfg: &SensorConfig<S>, row: usize, col: usize) -> [S; 3] {
    let (elev, az) = cfg.bin_center(row, col);
    direction_from_angles(elev, az)
}

/// Unit direction for `(elevation, azimuth)` in the sensor frame.
pub fn direction_from_angles<S: Real>(elevation: S, azimuth: S) -> [S; 3] {
    let (sin_e, cos_e) = (elevation.sin(), elevation.cos());
    let (sin_a, cos_a) = (azimuth.sin(), azimuth.cos());
    [cos_e * cos_a, cos_e * sin_a, sin_e]
}

/// Projects a sensor-frame point through the camera. `None` when the point
/// sits at or behind the camera plane (camera-space depth <= 1e-6).
pub fn project_to_camera<S: Real>(point: [S; 3], cam: &CameraModel<S>) -> Option<PixelCoord<S>> {
    let c = cam.to_camera_frame(point);
    let depth = c[2];
    if depth <= S::of(MIN_CAMERA_DEPTH) {
        return None;
    }
    Some(PixelCoord {
        u: cam.fx() * c[0] / depth + cam.cx(),
        v: cam.fy() * c[1] / depth + cam.cy(),
        depth,
    })
}

/// Bilinear sample of a grid at continuous `(u, v)`; integer positions
/// return the stored value exactly. Sampling is only defined on the sample
/// lattice hull `0 <= u <= cols-1`, `0 <= v <= rows-1`.
pub fn sample_bilinear<S: Real>(grid: &Grid<S>, u: S, v: S) -> Result<S, GeometryError> {
    let max_u = S::of_usize(grid.cols() - 1);
    let max_v = S::of_usize(grid.rows() - 1);
    if !(u >= S::zero() && u <= max_u && v >= S::zero() && v <= max_v) {
        return Err(GeometryError::SampleOutOfBounds {
            u: u.widen(),
            v: v.widen(),
            rows: grid.rows(),
            cols: grid.cols(),
        });
    }
    let u0 = u.floor();
    let v0 = v.floor();
    let fu = u - u0;
    let fv = v - v0;
    let c0 = u0.to_usize().expect("in-bounds column");
    let r0 = v0.to_usize().expect("in-bounds row");
    let c1 = (c0 + 1).min(grid.cols() - 1);
    let r1 = (r0 + 1).min(grid.rows() - 1);
    // Nested lerp keeps constant fields exact and stays within the corner
    // value hull.
    let lerp = |a: S, b: S, t: S| a + t * (b - a);
    let top = lerp(*grid.get(r0, c0), *grid.get(r0, c1), fu);
    let bottom = lerp(*grid.get(r1, c0), *grid.get(r1, c1), fu);
    Ok(lerp(top, bottom, fv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::SensorConfig;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg_4x8() -> SensorConfig<f64> {
        SensorConfig::new(
            "t",
            4,
            8,
            (-15f64).to_radians(),
            15f64.to_radians(),
            -std::f64::consts::PI,
            std::f64::consts::PI,
            100.0,
        )
        .unwrap()
    }

    #[test]
    fn binning_places_a_forward_point_in_the_centre_cell() {
        let cloud = PointCloud::from_points(vec![Point::new(10.0, 0.0, 0.0, 0.7).unwrap()]);
        let ri = pointcloud_to_range_image(&cloud, &cfg_4x8());
        assert_eq!(ri.count_returns(), 1);
        assert_eq!(*ri.depth().get(2, 4), 10.0);
        assert_eq!(*ri.intensity().get(2, 4), 0.7);
    }

    #[test]
    fn binning_skips_out_of_range_points() {
        let cfg = cfg_4x8();
        let far = PointCloud::from_points(vec![Point::new(101.0, 0.0, 0.0, 0.5).unwrap()]);
        assert_eq!(pointcloud_to_range_image(&far, &cfg).count_returns(), 0);
        // Elevation above the top edge.
        let steep = PointCloud::from_points(vec![Point::new(1.0, 0.0, 1.0, 0.5).unwrap()]);
        assert_eq!(pointcloud_to_range_image(&steep, &cfg).count_returns(), 0);
        // The exact origin has no direction.
        let origin = PointCloud::from_points(vec![Point::new(0.0, 0.0, 0.0, 0.0).unwrap()]);
        assert_eq!(pointcloud_to_range_image(&origin, &cfg).count_returns(), 0);
    }

    #[test]
    fn binning_keeps_the_nearest_collision() {
        let cloud = PointCloud::from_points(vec![
            Point::new(10.0, 0.0, 0.0, 0.1).unwrap(),
            Point::new(5.0, 0.0, 0.0, 0.9).unwrap(),
            Point::new(7.0, 0.0, 0.0, 0.4).unwrap(),
        ]);
        let ri = pointcloud_to_range_image(&cloud, &cfg_4x8());
        assert_eq!(*ri.depth().get(2, 4), 5.0);
        assert_eq!(*ri.intensity().get(2, 4), 0.9);
    }

    #[test]
    fn full_circle_configs_fold_azimuth() {
        let cfg = cfg_4x8();
        assert!(cfg.wraps());
        // atan2(+0, -1) = +π is identical to azimuth -π: column 0.
        let cloud = PointCloud::from_points(vec![Point::new(-10.0, 0.0, 0.0, 0.5).unwrap()]);
        let ri = pointcloud_to_range_image(&cloud, &cfg);
        assert_eq!(ri.count_returns(), 1);
        assert!(ri.has_return(2, 0));

        // A partial-sweep config skips points outside its azimuth window.
        let partial =
            SensorConfig::new("p", 4, 8, -0.3, 0.3, -0.5, 0.5, 100.0).unwrap();
        assert!(!partial.wraps());
        let behind = PointCloud::from_points(vec![Point::new(-10.0, 0.0, 0.0, 0.5).unwrap()]);
        assert_eq!(pointcloud_to_range_image(&behind, &partial).count_returns(), 0);
    }

    #[test]
    fn reconstruction_uses_bin_centres() {
        let mut ri = RangeImage::new(4, 8);
        ri.set_return(2, 4, 10.0, 0.7);
        let cloud = range_image_to_pointcloud(&ri, &cfg_4x8());
        assert_eq!(cloud.len(), 1);
        let p = cloud.points()[0];
        // Cell (2, 4) centres at elevation -3.75°, azimuth +22.5°.
        let elev = (-3.75f64).to_radians();
        let az = 22.5f64.to_radians();
        assert!((p.x - 10.0 * elev.cos() * az.cos()).abs() < 1e-12);
        assert!((p.y - 10.0 * elev.cos() * az.sin()).abs() < 1e-12);
        assert!((p.z - 10.0 * elev.sin()).abs() < 1e-12);
        assert_eq!(p.intensity, 0.7);
    }

    #[test]
    fn round_trip_through_bin_centres_is_stable() {
        let cfg = SensorConfig::<f64>::preset("kitti64").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut ri = RangeImage::new(cfg.rows(), cfg.cols());
        for _ in 0..500 {
            let row = rng.gen_range(0..cfg.rows());
            let col = rng.gen_range(0..cfg.cols());
            let depth = rng.gen_range(1.0..cfg.max_range());
            let intensity = rng.gen_range(0.0..1.0);
            ri.set_return(row, col, depth, intensity);
        }
        let cloud = range_image_to_pointcloud(&ri, &cfg);
        let back = pointcloud_to_range_image(&cloud, &cfg);
        assert_eq!(back.count_returns(), ri.count_returns());
        for (row, col, depth, intensity) in ri.returns() {
            assert!(
                (*back.depth().get(row, col) - depth).abs() < 1e-9,
                "depth drifted at ({row}, {col})"
            );
            assert_eq!(*back.intensity().get(row, col), intensity);
        }
    }

    #[test]
    fn projection_matches_hand_computed_pixels() {
        let cam = CameraModel::<f64>::standard();
        // 5 m straight ahead lands on the principal point with depth 5.
        let centre = project_to_camera([5.0, 0.0, 0.0], &cam).unwrap();
        assert_eq!(centre.u, 256.0);
        assert_eq!(centre.v, 128.0);
        assert_eq!(centre.depth, 5.0);
        // 1 m to the sensor's left shifts the pixel left by fx/5 = 51.2.
        let left = project_to_camera([5.0, 1.0, 0.0], &cam).unwrap();
        assert!((left.u - (256.0 - 51.2)).abs() < 1e-12);
        assert_eq!(left.v, 128.0);
        // Behind the camera there is no projection.
        assert_eq!(project_to_camera([-5.0, 0.0, 0.0], &cam), None);
        assert_eq!(project_to_camera([0.0, 0.0, 0.0], &cam), None);
    }

    #[test]
    fn bilinear_matches_hand_computed_value() {
        let grid = Grid::from_vec(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(sample_bilinear(&grid, 0.25, 0.75).unwrap(), 1.75);
        // Integer positions return stored values exactly.
        assert_eq!(sample_bilinear(&grid, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(sample_bilinear(&grid, 1.0, 1.0).unwrap(), 3.0);
        assert_eq!(sample_bilinear(&grid, 1.0, 0.0).unwrap(), 1.0);
        // The lattice hull is closed but nothing outside it is defined.
        assert!(sample_bilinear(&grid, -0.01, 0.0).is_err());
        assert!(sample_bilinear(&grid, 0.0, 1.01).is_err());
    }

    proptest! {
        #[test]
        fn bilinear_stays_within_corner_hull(
            vals in proptest::collection::vec(0f64..1.0, 9),
            u in 0f64..2.0,
            v in 0f64..2.0,
        ) {
            let grid = Grid::from_vec(3, 3, vals).unwrap();
            let s = sample_bilinear(&grid, u, v).unwrap();
            let lo = grid.data().iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = grid.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(s >= lo - 1e-12 && s <= hi + 1e-12);
        }

        #[test]
        fn binning_respects_the_documented_formulas(
            x in 0.5f64..50.0,
            y in -20f64..20.0,
            z in -5f64..5.0,
        ) {
            let cfg = cfg_4x8();
            let p = Point::new(x, y, z, 0.5).unwrap();
            let cloud = PointCloud::from_points(vec![p]);
            let ri = pointcloud_to_range_image(&cloud, &cfg);
            let elevation = z.atan2(x.hypot(y));
            let row_f = ((cfg.elev_max() - elevation) / cfg.delta_elev()).floor();
            let expect_hit =
                p.range() <= cfg.max_range() && row_f >= 0.0 && row_f < cfg.rows() as f64;
            prop_assert_eq!(ri.count_returns() == 1, expect_hit);
            if expect_hit {
                let row = row_f as usize;
                let azimuth = y.atan2(x);
                let col = (((azimuth - cfg.az_min()) / cfg.delta_az()).floor() as i64)
                    .rem_euclid(cfg.cols() as i64) as usize;
                prop_assert!(ri.has_return(row, col));
            }
        }
    }
}

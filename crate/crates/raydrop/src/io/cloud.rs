//! Headerless point-cloud files: consecutive `(x, y, z, intensity)`
//! quadruples of little-endian `f32`, KITTI-style.

use std::path::Path;

use super::FormatError;
use crate::types::{Point, PointCloud, ValidationError};
use crate::Real;

pub fn read_cloud_file(path: &Path) -> Result<Vec<[f32; 4]>, FormatError> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    if bytes.len() % 16 != 0 {
        return Err(FormatError::RaggedCloud(bytes.len() as u64));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|rec| {
            let f = |at: usize| f32::from_le_bytes([rec[at], rec[at + 1], rec[at + 2], rec[at + 3]]);
            [f(0), f(4), f(8), f(12)]
        })
        .collect())
}

pub fn write_cloud_file(path: &Path, rows: &[[f32; 4]]) -> Result<(), FormatError> {
    let mut bytes = Vec::with_capacity(rows.len() * 16);
    for row in rows {
        for v in row {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, bytes).map_err(|e| FormatError::io(path, e))
}

/// Converts raw file rows into a validated cloud; out-of-range intensities
/// or non-finite coordinates are data errors.
pub fn cloud_to_points<S: Real>(rows: &[[f32; 4]]) -> Result<PointCloud<S>, ValidationError> {
    let mut points = Vec::with_capacity(rows.len());
    for row in rows {
        points.push(Point::new(
            S::of(row[0] as f64),
            S::of(row[1] as f64),
            S::of(row[2] as f64),
            S::of(row[3] as f64),
        )?);
    }
    Ok(PointCloud::from_points(points))
}

pub fn points_to_cloud_rows<S: Real>(cloud: &PointCloud<S>) -> Vec<[f32; 4]> {
    cloud
        .points()
        .iter()
        .map(|p| {
            [
                p.x.widen() as f32,
                p.y.widen() as f32,
                p.z.widen() as f32,
                p.intensity.widen() as f32,
            ]
        })
        .collect()
}

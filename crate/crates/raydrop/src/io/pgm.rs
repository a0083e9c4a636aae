//! Binary PGM (P5) export for eyeballing grids.

use std::path::Path;

use super::FormatError;
use crate::{Grid, Real};

/// Writes a `[0, 1]` grid as an 8-bit binary PGM; each value maps to
/// `round(255 * v)`. Values outside `[0, 1]` are data errors.
pub fn write_pgm<S: Real>(path: &Path, grid: &Grid<S>) -> Result<(), FormatError> {
    let mut bytes = Vec::with_capacity(32 + grid.rows() * grid.cols());
    bytes.extend_from_slice(format!("P5\n{} {}\n255\n", grid.cols(), grid.rows()).as_bytes());
    for (row, col, &v) in grid.enumerate() {
        let v = v.widen();
        if !(0.0..=1.0).contains(&v) {
            return Err(FormatError::PixelRange { row, col, value: v });
        }
        bytes.push((255.0 * v).round() as u8);
    }
    std::fs::write(path, bytes).map_err(|e| FormatError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn pgm_bytes_match_the_format() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let grid = Grid::from_vec(2, 2, vec![0.0f64, 0.5, 1.0, 0.25]).unwrap();
        write_pgm(&path, &grid).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..], b"P5\n2 2\n255\n\x00\x80\xff\x40");
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let grid = Grid::from_vec(1, 2, vec![0.0f64, 1.5]).unwrap();
        assert!(matches!(
            write_pgm(&path, &grid),
            Err(FormatError::PixelRange { .. })
        ));
    }
}

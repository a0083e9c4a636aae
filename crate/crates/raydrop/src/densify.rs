//! Densification: sparse projected LiDAR returns -> dense camera-space mask.
//!
//! Neighbouring range-image cells almost always sample the same surface, so
//! meshing each 2x2 cell window into triangles and rasterizing them with
//! interpolated intensity turns the sparse projected returns into a dense
//! image-aligned target the predictor can regress against.

use crate::geometry::{bin_center_direction, project_to_camera};
use crate::types::{CameraModel, DenseIntensityMask, RangeImage, SensorConfig};
use crate::{Grid, Real};

/// A projected return: continuous pixel position, camera-space depth, and
/// the return's intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskVertex<S> {
    pub u: S,
    pub v: S,
    pub depth: S,
    pub intensity: S,
}

/// Triangle of projected returns, rasterized in pixel space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle<S> {
    pub a: MaskVertex<S>,
    pub b: MaskVertex<S>,
    pub c: MaskVertex<S>,
}

/// Projected vertices slightly outside the canvas still matter: triangles
/// they anchor can cover border pixels. Keep anything within this margin of
/// the image rectangle.
const GUARD_MARGIN: f64 = 1.0;

/// Barycentric slack for the inside test, in normalized coordinates. Pixels
/// exactly on shared triangle edges land inside both triangles under any
/// evaluation order.
const INSIDE_TOLERANCE: f64 = 1e-12;

/// Projects every return of `image` through `cam`, producing the vertex
/// lattice for meshing. A cell is `None` when it has no return, projects
/// behind the camera, or falls outside the image rectangle plus a one-pixel
/// guard margin.
pub fn collect_vertices<S: Real>(
    image: &RangeImage<S>,
    cfg: &SensorConfig<S>,
    cam: &CameraModel<S>,
) -> Grid<Option<MaskVertex<S>>> {
    let mut vertices = Grid::filled(image.rows(), image.cols(), None);
    let lo = S::of(-GUARD_MARGIN);
    let hi_u = S::of_usize(cam.width()) + S::of(GUARD_MARGIN) - S::one();
    let hi_v = S::of_usize(cam.height()) + S::of(GUARD_MARGIN) - S::one();
    for (row, col, depth, intensity) in image.returns() {
        let dir = bin_center_direction(cfg, row, col);
        let point = [dir[0] * depth, dir[1] * depth, dir[2] * depth];
        if let Some(p) = project_to_camera(point, cam) {
            if p.u >= lo && p.u <= hi_u && p.v >= lo && p.v <= hi_v {
                vertices.set(
                    row,
                    col,
                    Some(MaskVertex {
                        u: p.u,
                        v: p.v,
                        depth: p.depth,
                        intensity,
                    }),
                );
            }
        }
    }
    vertices
}

/// Meshes each 2x2 window of the vertex lattice.
///
/// Window `{A=(i,j), B=(i,j+1), C=(i+1,j), D=(i+1,j+1)}` (with `j+1` taken
/// modulo the column count on full-circle configs) yields triangles
/// `(A,B,C)` and `(C,B,D)` when all four corners are present, the single
/// surviving triangle when exactly three are, and nothing otherwise —
/// missing returns must stay holes, not get bridged.
pub fn mesh_cells<S: Real>(
    vertices: &Grid<Option<MaskVertex<S>>>,
    cfg: &SensorConfig<S>,
) -> Vec<Triangle<S>> {
    let rows = vertices.rows();
    let cols = vertices.cols();
    let windows = if cfg.wraps() && cols > 1 { cols } else { cols.saturating_sub(1) };
    let mut triangles = Vec::new();
    if rows < 2 {
        return triangles;
    }
    for i in 0..rows - 1 {
        for j in 0..windows {
            let jn = (j + 1) % cols;
            let a = *vertices.get(i, j);
            let b = *vertices.get(i, jn);
            let c = *vertices.get(i + 1, j);
            let d = *vertices.get(i + 1, jn);
            let tri = |a, b, c| Triangle { a, b, c };
            match (a, b, c, d) {
                (Some(a), Some(b), Some(c), Some(d)) => {
                    triangles.push(tri(a, b, c));
                    triangles.push(tri(c, b, d));
                }
                (None, Some(b), Some(c), Some(d)) => triangles.push(tri(b, c, d)),
                (Some(a), None, Some(c), Some(d)) => triangles.push(tri(a, c, d)),
                (Some(a), Some(b), None, Some(d)) => triangles.push(tri(a, b, d)),
                (Some(a), Some(b), Some(c), None) => triangles.push(tri(a, b, c)),
                _ => {}
            }
        }
    }
    triangles
}

/// Rasterizes triangles onto a `height x width` canvas, interpolating
/// intensity and depth barycentrically (screen-space linear — adequate at
/// the shallow depth gradients of LiDAR meshes).
///
/// A pixel centre — integer `(u, v)` — is inside when all three normalized
/// barycentric coordinates are `>= -1e-12`. Conflicts resolve by smaller
/// interpolated depth, and exact depth ties by smaller interpolated value,
/// so the output is independent of triangle order. Returns `(values,
/// depths)`; empty pixels are `0` in both.
pub fn rasterize<S: Real>(
    triangles: &[Triangle<S>],
    width: usize,
    height: usize,
) -> (Grid<S>, Grid<S>) {
    let mut values = Grid::filled(height, width, S::zero());
    let mut depths = Grid::filled(height, width, S::zero());
    let tol = S::of(-INSIDE_TOLERANCE);
    for t in triangles {
        let (a, b, c) = (&t.a, &t.b, &t.c);
        let denom = (b.v - c.v) * (a.u - c.u) + (c.u - b.u) * (a.v - c.v);
        if denom == S::zero() {
            continue; // degenerate: zero area, covers no pixel centre
        }
        let min_u = a.u.min(b.u).min(c.u);
        let max_u = a.u.max(b.u).max(c.u);
        let min_v = a.v.min(b.v).min(c.v);
        let max_v = a.v.max(b.v).max(c.v);
        let col_lo = clamp_to_canvas(min_u.floor(), width);
        let col_hi = clamp_to_canvas(max_u.ceil(), width);
        let row_lo = clamp_to_canvas(min_v.floor(), height);
        let row_hi = clamp_to_canvas(max_v.ceil(), height);
        for row in row_lo..=row_hi {
            let py = S::of_usize(row);
            for col in col_lo..=col_hi {
                let px = S::of_usize(col);
                let la = ((b.v - c.v) * (px - c.u) + (c.u - b.u) * (py - c.v)) / denom;
                let lb = ((c.v - a.v) * (px - c.u) + (a.u - c.u) * (py - c.v)) / denom;
                let lc = S::one() - la - lb;
                if la < tol || lb < tol || lc < tol {
                    continue;
                }
                let depth = la * a.depth + lb * b.depth + lc * c.depth;
                let value = (la * a.intensity + lb * b.intensity + lc * c.intensity)
                    .max(S::zero())
                    .min(S::one());
                let cur_d = *depths.get(row, col);
                let wins = cur_d == S::zero()
                    || depth < cur_d
                    || (depth == cur_d && value < *values.get(row, col));
                if wins {
                    depths.set(row, col, depth);
                    values.set(row, col, value);
                }
            }
        }
    }
    (values, depths)
}

fn clamp_to_canvas<S: Real>(coord: S, size: usize) -> usize {
    let max = (size - 1) as i64;
    match coord.to_i64() {
        Some(v) => v.clamp(0, max) as usize,
        // Non-finite or astronomically large coordinates saturate.
        None => {
            if coord < S::zero() {
                0
            } else {
                max as usize
            }
        }
    }
}

/// Full densification: project, mesh, rasterize, and package the result with
/// its paired depth buffer.
pub fn build_dense_mask<S: Real>(
    image: &RangeImage<S>,
    cfg: &SensorConfig<S>,
    cam: &CameraModel<S>,
) -> DenseIntensityMask<S> {
    let vertices = collect_vertices(image, cfg, cam);
    let triangles = mesh_cells(&vertices, cfg);
    let (values, depths) = rasterize(&triangles, cam.width(), cam.height());
    DenseIntensityMask::from_parts(values, Some(depths))
        .expect("rasterizer output satisfies mask invariants by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::SensorConfig;

    fn vert(u: f64, v: f64, depth: f64, intensity: f64) -> MaskVertex<f64> {
        MaskVertex {
            u,
            v,
            depth,
            intensity,
        }
    }

    fn window_cfg(wrap: bool) -> SensorConfig<f64> {
        let az_max = if wrap { std::f64::consts::PI } else { 1.0 };
        SensorConfig::new("t", 2, 3, -0.3, 0.3, -az_max, az_max, 100.0).unwrap()
    }

    fn lattice(cells: &[(usize, usize, MaskVertex<f64>)]) -> Grid<Option<MaskVertex<f64>>> {
        let mut g = Grid::filled(2, 3, None);
        for &(r, c, v) in cells {
            g.set(r, c, Some(v));
        }
        g
    }

    #[test]
    fn four_present_cells_mesh_into_two_triangles() {
        let a = vert(0.0, 0.0, 1.0, 0.1);
        let b = vert(2.0, 0.0, 1.0, 0.2);
        let c = vert(0.0, 2.0, 1.0, 0.3);
        let d = vert(2.0, 2.0, 1.0, 0.4);
        let tris = mesh_cells(
            &lattice(&[(0, 0, a), (0, 1, b), (1, 0, c), (1, 1, d)]),
            &window_cfg(false),
        );
        assert_eq!(tris.len(), 2);
        assert_eq!((tris[0].a, tris[0].b, tris[0].c), (a, b, c));
        assert_eq!((tris[1].a, tris[1].b, tris[1].c), (c, b, d));
    }

    #[test]
    fn three_present_cells_mesh_into_one_triangle() {
        let b = vert(2.0, 0.0, 1.0, 0.2);
        let c = vert(0.0, 2.0, 1.0, 0.3);
        let d = vert(2.0, 2.0, 1.0, 0.4);
        let tris = mesh_cells(&lattice(&[(0, 1, b), (1, 0, c), (1, 1, d)]), &window_cfg(false));
        assert_eq!(tris.len(), 1);
        assert_eq!((tris[0].a, tris[0].b, tris[0].c), (b, c, d));
    }

    #[test]
    fn sparse_windows_mesh_nothing() {
        let b = vert(2.0, 0.0, 1.0, 0.2);
        let c = vert(0.0, 2.0, 1.0, 0.3);
        assert!(mesh_cells(&lattice(&[(0, 1, b), (1, 0, c)]), &window_cfg(false)).is_empty());
        assert!(mesh_cells(&lattice(&[(0, 1, b)]), &window_cfg(false)).is_empty());
    }

    #[test]
    fn full_circle_configs_mesh_the_seam_window() {
        // Returns only in the first and last columns: without wrapping there
        // is no complete window, with wrapping the seam window meshes.
        let cells = [
            (0, 0, vert(0.0, 0.0, 1.0, 0.1)),
            (0, 2, vert(2.0, 0.0, 1.0, 0.2)),
            (1, 0, vert(0.0, 2.0, 1.0, 0.3)),
            (1, 2, vert(2.0, 2.0, 1.0, 0.4)),
        ];
        assert!(mesh_cells(&lattice(&cells), &window_cfg(false)).is_empty());
        let tris = mesh_cells(&lattice(&cells), &window_cfg(true));
        assert_eq!(tris.len(), 2, "seam window A=(i, last), B=(i, 0)");
    }

    #[test]
    fn rasterize_covers_pixel_centres_inside_and_on_edges() {
        let t = Triangle {
            a: vert(0.0, 0.0, 2.0, 1.0),
            b: vert(2.0, 0.0, 2.0, 0.0),
            c: vert(0.0, 2.0, 2.0, 0.0),
        };
        let (values, depths) = rasterize(&[t], 4, 4);
        // Pixel (1, 1) sits exactly on the hypotenuse: inside by tolerance.
        let covered: Vec<(usize, usize)> = depths
            .enumerate()
            .filter(|(_, _, &d)| d > 0.0)
            .map(|(r, c, _)| (r, c))
            .collect();
        assert_eq!(covered, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)]);
        assert_eq!(*values.get(0, 0), 1.0);
        assert_eq!(*values.get(0, 2), 0.0);
        assert!((*values.get(1, 1) - 0.0).abs() < 1e-12, "midpoint of b-c edge");
        assert!((*values.get(0, 1) - 0.5).abs() < 1e-12);
        assert_eq!(*depths.get(1, 1), 2.0);
    }

    #[test]
    fn rasterize_is_independent_of_triangle_order() {
        let near = Triangle {
            a: vert(0.0, 0.0, 1.0, 0.8),
            b: vert(3.0, 0.0, 1.0, 0.8),
            c: vert(0.0, 3.0, 1.0, 0.8),
        };
        let far = Triangle {
            a: vert(0.0, 0.0, 5.0, 0.2),
            b: vert(3.0, 0.0, 5.0, 0.2),
            c: vert(0.0, 3.0, 5.0, 0.2),
        };
        // Same depth everywhere, different values: the tie-break keeps the
        // smaller value whichever triangle comes first.
        let tie_a = Triangle {
            a: vert(0.0, 0.0, 5.0, 0.9),
            b: vert(3.0, 0.0, 5.0, 0.9),
            c: vert(0.0, 3.0, 5.0, 0.9),
        };
        let forward = rasterize(&[near, far, tie_a], 4, 4);
        let backward = rasterize(&[tie_a, far, near], 4, 4);
        assert_eq!(forward, backward);
        assert_eq!(*forward.0.get(0, 0), 0.8);
        let ties = rasterize(&[far, tie_a], 4, 4);
        assert_eq!(*ties.0.get(0, 0), 0.2, "equal depth resolves to smaller value");
    }

    #[test]
    fn rasterize_skips_degenerate_triangles() {
        let t = Triangle {
            a: vert(0.0, 0.0, 1.0, 0.5),
            b: vert(1.0, 1.0, 1.0, 0.5),
            c: vert(2.0, 2.0, 1.0, 0.5),
        };
        let (values, depths) = rasterize(&[t], 4, 4);
        assert!(values.data().iter().all(|&v| v == 0.0));
        assert!(depths.data().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn collect_vertices_applies_the_guard_margin() {
        // A camera whose image is 4x4 pixels; sensor cells project straight
        // ahead and far off-image respectively.
        let cfg = SensorConfig::<f64>::new("t", 2, 2, -0.3, 0.3, -0.9, 0.9, 100.0).unwrap();
        let cam = CameraModel::default_for(4, 4);
        let mut ri = RangeImage::new(2, 2);
        // Bin centres: elevations ±0.15, azimuths ±0.45. Azimuth 0.45 at
        // fx = 2 projects to u = 2 - 2 tan(0.45) ≈ 1.03 (on-image).
        ri.set_return(0, 0, 10.0, 0.5);
        ri.set_return(1, 1, 10.0, 0.5);
        let verts = collect_vertices(&ri, &cfg, &cam);
        assert!(verts.get(0, 0).is_some());
        assert!(verts.get(1, 1).is_some());

        // A sensor pointing mostly sideways projects far outside the guard.
        let wide = SensorConfig::<f64>::new("w", 2, 2, -0.3, 0.3, 1.2, 1.5, 100.0).unwrap();
        let mut side = RangeImage::new(2, 2);
        side.set_return(0, 0, 10.0, 0.5);
        let verts = collect_vertices(&side, &wide, &cam);
        assert!(verts.get(0, 0).is_none());
    }

    #[test]
    fn build_dense_mask_rasterizes_a_wall_patch() {
        // A frontal wall 10 m ahead sampled by a narrow sensor: every cell
        // returns, the mesh covers the middle of the image densely.
        let cfg = SensorConfig::<f64>::new("t", 8, 8, -0.2, 0.2, -0.2, 0.2, 100.0).unwrap();
        let cam = CameraModel::default_for(32, 32);
        let mut ri = RangeImage::new(8, 8);
        for row in 0..8 {
            for col in 0..8 {
                let dir = bin_center_direction(&cfg, row, col);
                let depth = 10.0 / dir[0]; // wall at x = 10
                ri.set_return(row, col, depth, 0.5);
            }
        }
        let mask = build_dense_mask(&ri, &cfg, &cam);
        assert_eq!(mask.height(), 32);
        assert_eq!(mask.width(), 32);
        // The wall patch spans u,v ≈ 16 ± 16·tan(0.175) ≈ 16 ± 2.8; probe
        // the centre.
        assert!(*mask.values().get(16, 16) > 0.0);
        assert!((*mask.values().get(16, 16) - 0.5).abs() < 1e-9, "uniform intensity");
        let depth = mask.depth().unwrap();
        assert!((*depth.get(16, 16) - 10.0).abs() < 1e-6, "camera z of a frontal wall");
        // Far corners stay empty.
        assert_eq!(*mask.values().get(0, 0), 0.0);
    }
}

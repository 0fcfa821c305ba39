//! Depth-buffer view rendering with a software rasterizer.
//!
//! Cameras sit on a sphere around the normalized model, indexed by azimuth
//! (polar angle in the x-y plane) and elevation (angle above/below it).
//! Each view is an orthographic projection onto a square image: pixel value 0
//! means no surface, and covered pixels store `(1 + z) / 2` where `z` is the
//! camera-space depth of the nearest hit, so nearer surfaces are brighter.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

/// One grayscale depth projection of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    /// Row-major intensities in [0,1]; row 0 is the top of the image.
    pub pixels: Vec<f64>,
    pub view_index: usize,
}

impl DepthImage {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// The ordered set of depth views of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSet {
    pub model_id: String,
    pub images: Vec<DepthImage>,
}

/// Viewpoints on a sphere: `azimuth_count` polar angles crossed with
/// `elevation_count` latitudes. Elevations are offset by half a step so the
/// poles are never duplicated; view index `j * azimuth_count + i` pairs
/// elevation row `j` with azimuth column `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraRig {
    pub azimuth_count: usize,
    pub elevation_count: usize,
    pub directions: Vec<Vector3<f64>>,
}

impl CameraRig {
    pub fn view_count(&self) -> usize {
        self.directions.len()
    }
}

/// Build the camera rig. Azimuths are `i * 360/azimuth_count` degrees;
/// elevations are `-90 + (j + 0.5) * 180/elevation_count` degrees; the unit
/// direction is `(cos e cos a, cos e sin a, sin e)`.
pub fn make_rig(azimuth_count: usize, elevation_count: usize) -> Result<CameraRig> {
    if azimuth_count == 0 || elevation_count == 0 {
        return Err(Error::InvalidInput(
            "camera rig needs at least one azimuth and one elevation".into(),
        ));
    }
    let mut directions = Vec::with_capacity(azimuth_count * elevation_count);
    for j in 0..elevation_count {
        let elevation =
            (-90.0 + (j as f64 + 0.5) * 180.0 / elevation_count as f64).to_radians();
        for i in 0..azimuth_count {
            let azimuth = (i as f64 * 360.0 / azimuth_count as f64).to_radians();
            directions.push(Vector3::new(
                elevation.cos() * azimuth.cos(),
                elevation.cos() * azimuth.sin(),
                elevation.sin(),
            ));
        }
    }
    Ok(CameraRig {
        azimuth_count,
        elevation_count,
        directions,
    })
}

/// Orthonormal camera frame for a view direction: `dir` is where the camera
/// sits (it looks back along `-dir`), and the returned (right, up) axes span
/// the image plane. The world up reference is +z, switching to +x when the
/// view direction is within ~8 degrees of a pole.
fn camera_frame(dir: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let reference = if dir.z.abs() > 0.99 {
        Vector3::new(1.0, 0.0, 0.0)
    } else {
        Vector3::new(0.0, 0.0, 1.0)
    };
    let right = reference.cross(dir).normalize();
    let up = dir.cross(&right);
    (right, up)
}

/// Signed twice-area of screen triangle (a, b, p); positive when p lies to
/// the left of a->b in a y-down coordinate system.
fn orient2d(ax: f64, ay: f64, bx: f64, by: f64, px: f64, py: f64) -> f64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

/// Top-left fill rule for an edge a->b of a screen-CCW triangle (y down):
/// pixels exactly on a top or left edge belong to the triangle.
fn edge_is_top_left(ax: f64, ay: f64, bx: f64, by: f64) -> bool {
    (ay == by && bx < ax) || by > ay
}

/// Render one depth view of a normalized mesh along `dir`.
fn render_view(
    mesh: &TriangleMesh,
    dir: &Vector3<f64>,
    resolution: usize,
    view_index: usize,
) -> DepthImage {
    let (right, up) = camera_frame(dir);
    let res = resolution as f64;

    // Screen-space vertices: x right, y down, both in pixel units; z is
    // camera-space depth (larger = nearer to the camera).
    let projected: Vec<(f64, f64, f64)> = mesh
        .vertices
        .iter()
        .map(|v| {
            let sx = right.dot(v);
            let sy = up.dot(v);
            let z = dir.dot(v);
            ((sx + 1.0) * 0.5 * res, (1.0 - sy) * 0.5 * res, z)
        })
        .collect();

    let mut depth = vec![f64::NEG_INFINITY; resolution * resolution];
    for f in &mesh.faces {
        let (a, mut b, mut c) = (projected[f[0]], projected[f[1]], projected[f[2]]);
        let mut area = orient2d(a.0, a.1, b.0, b.1, c.0, c.1);
        if area == 0.0 {
            continue; // edge-on triangle covers no pixel centers
        }
        if area < 0.0 {
            std::mem::swap(&mut b, &mut c);
            area = -area;
        }

        let min_x = a.0.min(b.0).min(c.0).max(0.0).floor() as usize;
        let max_x = (a.0.max(b.0).max(c.0).min(res - 1.0).ceil() as usize).min(resolution - 1);
        let min_y = a.1.min(b.1).min(c.1).max(0.0).floor() as usize;
        let max_y = (a.1.max(b.1).max(c.1).min(res - 1.0).ceil() as usize).min(resolution - 1);
        if a.0.max(b.0).max(c.0) < 0.0 || a.1.max(b.1).max(c.1) < 0.0 {
            continue;
        }

        let tl0 = edge_is_top_left(b.0, b.1, c.0, c.1);
        let tl1 = edge_is_top_left(c.0, c.1, a.0, a.1);
        let tl2 = edge_is_top_left(a.0, a.1, b.0, b.1);

        for py in min_y..=max_y {
            let cy = py as f64 + 0.5;
            for px in min_x..=max_x {
                let cx = px as f64 + 0.5;
                let w0 = orient2d(b.0, b.1, c.0, c.1, cx, cy);
                let w1 = orient2d(c.0, c.1, a.0, a.1, cx, cy);
                let w2 = orient2d(a.0, a.1, b.0, b.1, cx, cy);
                let inside = (w0 > 0.0 || (w0 == 0.0 && tl0))
                    && (w1 > 0.0 || (w1 == 0.0 && tl1))
                    && (w2 > 0.0 || (w2 == 0.0 && tl2));
                if inside {
                    let z = (w0 * a.2 + w1 * b.2 + w2 * c.2) / area;
                    let cell = &mut depth[py * resolution + px];
                    if z > *cell {
                        *cell = z;
                    }
                }
            }
        }
    }

    let pixels = depth
        .into_iter()
        .map(|z| {
            if z == f64::NEG_INFINITY {
                0.0
            } else {
                ((1.0 + z) * 0.5).clamp(0.0, 1.0)
            }
        })
        .collect();
    DepthImage {
        width: resolution,
        height: resolution,
        pixels,
        view_index,
    }
}

/// Render the full view set of a pose-normalized mesh. Views are rendered
/// independently in parallel; output order follows the rig's direction list,
/// and identical inputs produce bit-identical images.
pub fn render_depth(mesh: &TriangleMesh, rig: &CameraRig, resolution: usize) -> Result<ViewSet> {
    if resolution == 0 {
        return Err(Error::InvalidInput("resolution must be positive".into()));
    }
    let radius = mesh.max_radius();
    if radius > 1.0 + 1e-6 {
        return Err(Error::InvalidInput(format!(
            "mesh {} is not pose-normalized (max vertex norm {radius:.6})",
            mesh.id
        )));
    }
    let images = rig
        .directions
        .par_iter()
        .enumerate()
        .map(|(i, dir)| render_view(mesh, dir, resolution, i))
        .collect();
    Ok(ViewSet {
        model_id: mesh.id.clone(),
        images,
    })
}

/// Write a depth image as a binary PGM (P5, maxval 255); pixel bytes are
/// `round(value * 255)`.
pub fn write_pgm(image: &DepthImage, path: &Path) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    bytes.extend(image.pixels.iter().map(|&p| (p * 255.0).round() as u8));
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TriangleMesh;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rig_8x8_has_expected_elevations() {
        let rig = make_rig(8, 8).unwrap();
        assert_eq!(rig.view_count(), 64);
        let expected: Vec<f64> = (0..8).map(|j| -90.0 + (j as f64 + 0.5) * 22.5).collect();
        assert_abs_diff_eq!(expected[0], -78.75);
        assert_abs_diff_eq!(expected[7], 78.75);
        for (j, &e) in expected.iter().enumerate() {
            let d = &rig.directions[j * 8]; // azimuth 0 column
            assert_abs_diff_eq!(d.z, e.to_radians().sin(), epsilon = 1e-12);
        }
        for d in &rig.directions {
            assert_abs_diff_eq!(d.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rig_1x1_points_along_x() {
        let rig = make_rig(1, 1).unwrap();
        assert_eq!(rig.view_count(), 1);
        let d = rig.directions[0];
        assert_abs_diff_eq!(d.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rig_4x2_distinct_directions_no_poles() {
        let rig = make_rig(4, 2).unwrap();
        assert_eq!(rig.view_count(), 8);
        for (i, a) in rig.directions.iter().enumerate() {
            assert!(a.z.abs() < 1.0 - 1e-9, "direction {i} sits at a pole");
            for b in &rig.directions[i + 1..] {
                assert!((a - b).norm() > 1e-9, "duplicate directions");
            }
        }
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(make_rig(0, 4).is_err());
        assert!(make_rig(4, 0).is_err());
    }

    /// Axis-aligned cube with half-extent h, tessellated two triangles per face.
    fn cube(h: f64) -> TriangleMesh {
        let mut vertices = Vec::new();
        for &z in &[-h, h] {
            for &y in &[-h, h] {
                for &x in &[-h, h] {
                    vertices.push(Vector3::new(x, y, z));
                }
            }
        }
        let quads = [
            [0, 1, 3, 2],
            [4, 6, 7, 5],
            [0, 4, 5, 1],
            [2, 3, 7, 6],
            [0, 2, 6, 4],
            [1, 5, 7, 3],
        ];
        let mut faces = Vec::new();
        for q in quads {
            faces.push([q[0], q[1], q[2]]);
            faces.push([q[0], q[2], q[3]]);
        }
        TriangleMesh::new("cube", vertices, faces).unwrap()
    }

    #[test]
    fn cube_face_is_constant_depth() {
        let mesh = cube(0.5);
        let rig = make_rig(1, 1).unwrap(); // view along +x
        let set = render_depth(&mesh, &rig, 64).unwrap();
        let img = &set.images[0];
        // The +x face sits at camera depth 0.5 -> value 0.75.
        let expected = (1.0 + 0.5) / 2.0;
        // Face spans [-0.5, 0.5] in screen axes = pixels 16..48; stay interior.
        let mut covered = 0;
        for y in 20..44 {
            for x in 20..44 {
                let v = img.get(x, y);
                assert!((v - expected).abs() < 1e-6, "pixel ({x},{y}) = {v}");
                covered += 1;
            }
        }
        assert!(covered > 0);
        // Background stays exactly zero.
        assert_eq!(img.get(0, 0), 0.0);
        assert_eq!(img.get(63, 63), 0.0);
    }

    #[test]
    fn vanishing_mesh_renders_black() {
        let tiny = cube(1e-9);
        let rig = make_rig(2, 2).unwrap();
        let set = render_depth(&tiny, &rig, 32).unwrap();
        for img in &set.images {
            assert!(img.pixels.iter().all(|&p| p == 0.0));
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let mesh = cube(0.5);
        let rig = make_rig(4, 4).unwrap();
        let a = render_depth(&mesh, &rig, 48).unwrap();
        let b = render_depth(&mesh, &rig, 48).unwrap();
        for (ia, ib) in a.images.iter().zip(&b.images) {
            assert!(ia
                .pixels
                .iter()
                .zip(&ib.pixels)
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn depth_shift_toward_camera_raises_values_by_half_delta() {
        let rig = make_rig(1, 1).unwrap();
        let dir = rig.directions[0];
        let base = cube(0.3);
        let delta = 0.25;
        let shifted = TriangleMesh::new(
            "shifted",
            base.vertices.iter().map(|v| v + dir * delta).collect(),
            base.faces.clone(),
        )
        .unwrap();
        let a = render_depth(&base, &rig, 48).unwrap();
        let b = render_depth(&shifted, &rig, 48).unwrap();
        let mut checked = 0;
        for (pa, pb) in a.images[0].pixels.iter().zip(&b.images[0].pixels) {
            if *pa > 0.0 {
                assert_abs_diff_eq!(pb - pa, delta / 2.0, epsilon = 1e-12);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn unnormalized_mesh_rejected() {
        let big = cube(2.0);
        let rig = make_rig(1, 1).unwrap();
        assert!(matches!(
            render_depth(&big, &rig, 32),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn adjacent_triangles_cover_shared_edge_once_per_pixel() {
        // Two triangles sharing a diagonal, both at distinct constant depths:
        // every covered pixel must take the nearer depth, and the diagonal
        // must not leak background through.
        let mesh = TriangleMesh::new(
            "pair",
            vec![
                Vector3::new(-0.8, -0.8, 0.1),
                Vector3::new(0.8, -0.8, 0.1),
                Vector3::new(0.8, 0.8, 0.1),
                Vector3::new(-0.8, 0.8, 0.1),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        // Viewed along +x this square is edge-on, so render along +z instead.
        let set_dir = Vector3::new(0.0, 0.0, 1.0);
        let img = render_view(&mesh, &set_dir, 32, 0);
        let expected = (1.0 + 0.1) / 2.0;
        for y in 8..24 {
            for x in 8..24 {
                assert_abs_diff_eq!(img.get(x, y), expected, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn pgm_output_format() {
        let img = DepthImage {
            width: 2,
            height: 2,
            pixels: vec![0.0, 0.5, 1.0, 0.25],
            view_index: 0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        write_pgm(&img, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..9], b"P5\n2 2\n25");
        assert_eq!(&bytes[bytes.len() - 4..], &[0u8, 128, 255, 64]);
    }
}

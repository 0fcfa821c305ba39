//! Triangle meshes: OFF/OBJ loading, saving, and pose normalization.
//!
//! Models are normalized for translation and scale only: the area-weighted
//! surface centroid moves to the origin and the farthest vertex lands on the
//! unit sphere, so every normalized shape fits an orthographic view volume of
//! half-width 1. Rotation is deliberately left alone; view-set matching is
//! what absorbs orientation differences.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Supported mesh file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    /// Infer the format from a file extension (`.off` / `.obj`, case-insensitive).
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("off") => Ok(MeshFormat::Off),
            Some("obj") => Ok(MeshFormat::Obj),
            other => Err(Error::InvalidInput(format!(
                "cannot infer mesh format from extension {:?} of {}",
                other,
                path.display()
            ))),
        }
    }
}

/// One triangle model: vertex positions plus vertex-index triples.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub id: String,
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Build a mesh, checking the structural invariants: at least 3 vertices,
    /// at least 1 face, and every face index in range.
    pub fn new(
        id: impl Into<String>,
        vertices: Vec<Vector3<f64>>,
        faces: Vec<[usize; 3]>,
    ) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "mesh needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if faces.is_empty() {
            return Err(Error::InvalidInput("mesh needs at least 1 face".into()));
        }
        for (i, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= vertices.len() {
                    return Err(Error::InvalidInput(format!(
                        "face {} references vertex {} but only {} vertices exist",
                        i,
                        v,
                        vertices.len()
                    )));
                }
            }
        }
        Ok(TriangleMesh {
            id: id.into(),
            vertices,
            faces,
        })
    }

    /// Largest vertex distance from the origin.
    pub fn max_radius(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Total surface area and area-weighted surface centroid.
    ///
    /// The centroid is the integral of position over the surface divided by
    /// total area: per triangle, centroid times area, summed and normalized.
    pub fn surface_centroid(&self) -> (f64, Vector3<f64>) {
        let mut total_area = 0.0;
        let mut weighted = Vector3::zeros();
        for f in &self.faces {
            let (a, b, c) = (
                self.vertices[f[0]],
                self.vertices[f[1]],
                self.vertices[f[2]],
            );
            let area = 0.5 * (b - a).cross(&(c - a)).norm();
            total_area += area;
            weighted += (a + b + c) / 3.0 * area;
        }
        if total_area > 0.0 {
            (total_area, weighted / total_area)
        } else {
            (0.0, Vector3::zeros())
        }
    }

    /// Translate the area-weighted surface centroid to the origin and scale
    /// uniformly so the farthest vertex sits at distance 1.
    ///
    /// Idempotent, and invariant to any input translation and uniform scale.
    /// Fails on meshes with zero total surface area.
    pub fn normalize_pose(&self) -> Result<TriangleMesh> {
        let (area, centroid) = self.surface_centroid();
        if area <= 0.0 || !area.is_finite() {
            return Err(Error::DegenerateGeometry(format!(
                "mesh {} has zero total surface area",
                self.id
            )));
        }
        let translated: Vec<Vector3<f64>> = self.vertices.iter().map(|v| v - centroid).collect();
        let radius = translated.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if radius <= 0.0 {
            return Err(Error::DegenerateGeometry(format!(
                "mesh {} collapses to a point",
                self.id
            )));
        }
        let scale = 1.0 / radius;
        Ok(TriangleMesh {
            id: self.id.clone(),
            vertices: translated.iter().map(|v| v * scale).collect(),
            faces: self.faces.clone(),
        })
    }
}

/// Load a mesh from disk in the named format.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriangleMesh> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("mesh")
        .to_string();
    match format {
        MeshFormat::Off => parse_off(&text, &id, path),
        MeshFormat::Obj => parse_obj(&text, &id, path),
    }
}

/// Save a mesh in the named format. Coordinates are printed with Rust's
/// shortest round-trip float formatting, so load -> save -> load is exact.
pub fn save_mesh(mesh: &TriangleMesh, path: &Path, format: MeshFormat) -> Result<()> {
    let mut out = String::new();
    match format {
        MeshFormat::Off => {
            writeln!(out, "OFF").unwrap();
            writeln!(out, "{} {} 0", mesh.vertices.len(), mesh.faces.len()).unwrap();
            for v in &mesh.vertices {
                writeln!(out, "{} {} {}", v.x, v.y, v.z).unwrap();
            }
            for f in &mesh.faces {
                writeln!(out, "3 {} {} {}", f[0], f[1], f[2]).unwrap();
            }
        }
        MeshFormat::Obj => {
            for v in &mesh.vertices {
                writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
            }
            for f in &mesh.faces {
                writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Split a polygon's vertex indices into a fan of triangles anchored at the
/// first listed vertex: (v0,v1,v2), (v0,v2,v3), ...
fn fan_triangulate(indices: &[usize], faces: &mut Vec<[usize; 3]>) {
    for w in 1..indices.len() - 1 {
        faces.push([indices[0], indices[w], indices[w + 1]]);
    }
}

/// Parse ASCII OFF text: "OFF" header, counts line, vertex lines, face lines.
/// Blank lines and `#` comments are skipped. Polygons with more than three
/// vertices are fan-triangulated.
pub fn parse_off(text: &str, id: &str, path: &Path) -> Result<TriangleMesh> {
    // (1-based line number, significant content)
    let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("").trim();
        (!content.is_empty()).then_some((i + 1, content))
    });

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty OFF file"))?;
    // Some writers put the counts on the header line ("OFF 8 12 0").
    let mut counts_content: Option<(usize, &str)> = None;
    if header == "OFF" {
        // counts on the next line
    } else if let Some(rest) = header.strip_prefix("OFF ") {
        counts_content = Some((header_line, rest));
    } else {
        return Err(Error::parse(
            path,
            header_line,
            format!("expected OFF header, found {:?}", header),
        ));
    }
    let (counts_line, counts) = match counts_content {
        Some(c) => c,
        None => lines
            .next()
            .ok_or_else(|| Error::parse(path, header_line, "missing counts line after OFF"))?,
    };

    let mut it = counts.split_whitespace();
    let mut next_count = |name: &str| -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::parse(path, counts_line, format!("missing {name} count")))?
            .parse::<usize>()
            .map_err(|_| Error::parse(path, counts_line, format!("non-numeric {name} count")))
    };
    let n_vertices = next_count("vertex")?;
    let n_faces = next_count("face")?;

    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| Error::parse(path, counts_line, "fewer vertex lines than declared"))?;
        let mut words = line.split_whitespace();
        let mut coord = |axis: &str| -> Result<f64> {
            words
                .next()
                .ok_or_else(|| Error::parse(path, line_no, format!("missing {axis} coordinate")))?
                .parse::<f64>()
                .map_err(|_| Error::parse(path, line_no, format!("non-numeric {axis} coordinate")))
        };
        vertices.push(Vector3::new(coord("x")?, coord("y")?, coord("z")?));
    }

    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| Error::parse(path, counts_line, "fewer face lines than declared"))?;
        let mut words = line.split_whitespace();
        let arity: usize = words
            .next()
            .ok_or_else(|| Error::parse(path, line_no, "empty face line"))?
            .parse()
            .map_err(|_| Error::parse(path, line_no, "non-numeric face vertex count"))?;
        if arity < 3 {
            return Err(Error::parse(
                path,
                line_no,
                format!("polygon with {arity} vertices"),
            ));
        }
        let mut indices = Vec::with_capacity(arity);
        for _ in 0..arity {
            let idx: usize = words
                .next()
                .ok_or_else(|| Error::parse(path, line_no, "fewer indices than face arity"))?
                .parse()
                .map_err(|_| Error::parse(path, line_no, "non-numeric face index"))?;
            if idx >= n_vertices {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("face index {idx} out of range (vertex count {n_vertices})"),
                ));
            }
            indices.push(idx);
        }
        fan_triangulate(&indices, &mut faces);
    }

    TriangleMesh::new(id, vertices, faces)
}

/// Parse Wavefront OBJ text, honoring only `v` and `f` records; everything
/// else is ignored. Face tokens may carry `/tex/normal` suffixes; negative
/// indices count back from the vertices read so far.
pub fn parse_obj(text: &str, id: &str, path: &Path) -> Result<TriangleMesh> {
    let mut vertices: Vec<Vector3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        match words.next() {
            Some("v") => {
                let mut coord = |axis: &str| -> Result<f64> {
                    words
                        .next()
                        .ok_or_else(|| {
                            Error::parse(path, line_no, format!("missing {axis} coordinate"))
                        })?
                        .parse::<f64>()
                        .map_err(|_| {
                            Error::parse(path, line_no, format!("non-numeric {axis} coordinate"))
                        })
                };
                vertices.push(Vector3::new(coord("x")?, coord("y")?, coord("z")?));
            }
            Some("f") => {
                let mut indices = Vec::new();
                for token in words {
                    let first = token.split('/').next().unwrap_or("");
                    let signed: i64 = first.parse().map_err(|_| {
                        Error::parse(path, line_no, format!("non-numeric face index {token:?}"))
                    })?;
                    let idx = if signed > 0 {
                        (signed - 1) as usize
                    } else if signed < 0 {
                        let back = (-signed) as usize;
                        if back > vertices.len() {
                            return Err(Error::parse(
                                path,
                                line_no,
                                format!("relative face index {signed} out of range"),
                            ));
                        }
                        vertices.len() - back
                    } else {
                        return Err(Error::parse(path, line_no, "face index 0 is invalid"));
                    };
                    if idx >= vertices.len() {
                        return Err(Error::parse(
                            path,
                            line_no,
                            format!(
                                "face index {signed} out of range (vertex count {})",
                                vertices.len()
                            ),
                        ));
                    }
                    indices.push(idx);
                }
                if indices.len() < 3 {
                    return Err(Error::parse(
                        path,
                        line_no,
                        format!("polygon with {} vertices", indices.len()),
                    ));
                }
                fan_triangulate(&indices, &mut faces);
            }
            _ => {}
        }
    }

    TriangleMesh::new(id, vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn off(text: &str) -> Result<TriangleMesh> {
        parse_off(text, "t", Path::new("test.off"))
    }

    #[test]
    fn minimal_off() {
        let m = off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2").unwrap();
        assert_eq!(m.vertices.len(), 3);
        assert_eq!(m.faces.len(), 1);
        assert_eq!(m.faces[0], [0, 1, 2]);
    }

    #[test]
    fn off_counts_on_header_line() {
        let m = off("OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2").unwrap();
        assert_eq!(m.vertices.len(), 3);
    }

    #[test]
    fn quad_fan_triangulates() {
        let m = off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn out_of_range_index_is_an_error() {
        let err = off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7").unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 6);
                assert!(message.contains("out of range"), "{message}");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn degenerate_polygon_is_an_error() {
        let err = off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n2 0 1").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 6, .. }));
    }

    #[test]
    fn non_numeric_coordinate_reports_line() {
        let err = off("OFF\n3 1 0\n0 0 0\n1 zero 0\n0 1 0\n3 0 1 2").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
    }

    #[test]
    fn obj_basic_and_ignored_records() {
        let text = "# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1\n";
        let m = parse_obj(text, "t", Path::new("t.obj")).unwrap();
        assert_eq!(m.vertices.len(), 3);
        assert_eq!(m.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn obj_negative_indices() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n";
        let m = parse_obj(text, "t", Path::new("t.obj")).unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2]]);
    }

    fn unit_cube_at(center: Vector3<f64>) -> TriangleMesh {
        let mut vertices = Vec::new();
        for &z in &[-0.5, 0.5] {
            for &y in &[-0.5, 0.5] {
                for &x in &[-0.5, 0.5] {
                    vertices.push(Vector3::new(x, y, z) + center);
                }
            }
        }
        // 12 triangles, two per cube face
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
            fan_triangulate(&q, &mut faces);
        }
        TriangleMesh::new("cube", vertices, faces).unwrap()
    }

    #[test]
    fn normalize_centers_offset_cube() {
        let m = unit_cube_at(Vector3::new(5.0, 5.0, 5.0));
        let n = m.normalize_pose().unwrap();
        let (_, centroid) = n.surface_centroid();
        assert!(centroid.norm() < 1e-9);
        assert_abs_diff_eq!(n.max_radius(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn normalize_is_idempotent() {
        let n = unit_cube_at(Vector3::new(1.0, -2.0, 3.0))
            .normalize_pose()
            .unwrap();
        let n2 = n.normalize_pose().unwrap();
        for (a, b) in n.vertices.iter().zip(&n2.vertices) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_triangle_centroid_by_hand() {
        // Triangle (0,0,0),(2,0,0),(0,2,0): area centroid (2/3, 2/3, 0).
        let m = TriangleMesh::new(
            "tri",
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(2.0, 0.0, 0.0),
                Vector3::new(0.0, 2.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let (area, centroid) = m.surface_centroid();
        assert_abs_diff_eq!(area, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(centroid.x, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(centroid.y, 2.0 / 3.0, epsilon = 1e-12);

        let n = m.normalize_pose().unwrap();
        // Farthest translated vertex: (2,0,0)-(2/3,2/3,0) with norm sqrt(16/9+4/9).
        let expected_scale = 1.0 / (20.0f64 / 9.0).sqrt();
        assert_abs_diff_eq!(
            n.vertices[1].x,
            (2.0 - 2.0 / 3.0) * expected_scale,
            epsilon = 1e-12
        );
        let (_, c) = n.surface_centroid();
        assert!(c.norm() < 1e-12);
    }

    #[test]
    fn zero_area_mesh_is_degenerate() {
        let m = TriangleMesh::new(
            "bad",
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 1.0, 1.0),
                Vector3::new(2.0, 2.0, 2.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(
            m.normalize_pose(),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn save_load_round_trip_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = unit_cube_at(Vector3::new(0.123456789123, -4.2, 1e-7))
            .normalize_pose()
            .unwrap();
        for (format, name) in [(MeshFormat::Off, "m.off"), (MeshFormat::Obj, "m.obj")] {
            let path = dir.path().join(name);
            save_mesh(&m, &path, format).unwrap();
            let back = load_mesh(&path, format).unwrap();
            assert_eq!(m.vertices, back.vertices);
            assert_eq!(m.faces, back.faces);
        }
    }

    proptest! {
        // normalize(s*M + t) == normalize(M) for any translation and positive scale
        #[test]
        fn normalize_invariant_to_similarity(
            tx in -50.0f64..50.0, ty in -50.0f64..50.0, tz in -50.0f64..50.0,
            s in 0.01f64..100.0,
        ) {
            let base = unit_cube_at(Vector3::new(0.3, -0.7, 0.1));
            let moved = TriangleMesh::new(
                "moved",
                base.vertices.iter().map(|v| v * s + Vector3::new(tx, ty, tz)).collect(),
                base.faces.clone(),
            ).unwrap();
            let a = base.normalize_pose().unwrap();
            let b = moved.normalize_pose().unwrap();
            for (va, vb) in a.vertices.iter().zip(&b.vertices) {
                prop_assert!((va - vb).norm() < 1e-9);
            }
        }
    }
}

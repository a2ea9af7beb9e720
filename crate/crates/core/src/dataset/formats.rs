//! Mesh, point-set and depth-image files.
//!
//! Meshes: ASCII PLY or Wavefront OBJ (polygons are fan-triangulated).
//! Point sets: ASCII PLY (vertex element only) or `.xyz` text.
//! Depth: single-channel 16-bit PNG in millimeters, 0 = invalid.
//! Masks: any 8-bit or 16-bit PNG, nonzero = object.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};
use nalgebra::Point3;

use crate::annotation::DepthMap;
use crate::error::{Error, Result};
use crate::geometry::{PointSet, TriangleMesh};

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

struct Ply {
    vertices: Vec<Point3<f64>>,
    faces: Vec<Vec<i64>>,
}

fn parse_ply(path: &Path, text: &str) -> Result<Ply> {
    let bad = |msg: String| Error::format(path, msg);
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(bad("missing `ply` magic".into()));
    }
    // (name, count, property names)
    let mut elements: Vec<(String, usize, Vec<String>)> = Vec::new();
    loop {
        let line = lines.next().ok_or_else(|| bad("header has no end_header".into()))?.trim();
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => {}
            ["format", other, ..] => return Err(bad(format!("unsupported PLY format `{other}`, only ascii is read"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count.parse().map_err(|_| bad(format!("bad element count `{count}`")))?;
                elements.push((name.to_string(), count, Vec::new()));
            }
            ["property", .., name] => {
                let el = elements.last_mut().ok_or_else(|| bad("property before element".into()))?;
                el.2.push(name.to_string());
            }
            _ => return Err(bad(format!("unrecognized header line `{line}`"))),
        }
    }
    let mut body = lines.filter(|l| !l.trim().is_empty());
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (name, count, props) in &elements {
        for i in 0..*count {
            let line = body
                .next()
                .ok_or_else(|| bad(format!("file ends inside element `{name}` ({i} of {count})")))?;
            match name.as_str() {
                "vertex" => {
                    let values: Vec<f64> = line
                        .split_whitespace()
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(format!("bad vertex line `{line}`")))?;
                    let coord = |axis: &str| {
                        props
                            .iter()
                            .position(|p| p == axis)
                            .and_then(|k| values.get(k).copied())
                            .ok_or_else(|| bad(format!("vertex line `{line}` has no {axis}")))
                    };
                    vertices.push(Point3::new(coord("x")?, coord("y")?, coord("z")?));
                }
                "face" => {
                    let values: Vec<i64> = line
                        .split_whitespace()
                        .map(|t| t.parse::<i64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(format!("bad face line `{line}`")))?;
                    let n = *values.first().ok_or_else(|| bad("empty face line".into()))? as usize;
                    if values.len() < n + 1 {
                        return Err(bad(format!("face line `{line}` lists fewer than {n} indices")));
                    }
                    faces.push(values[1..=n].to_vec());
                }
                _ => {}
            }
        }
    }
    Ok(Ply { vertices, faces })
}

fn parse_obj(path: &Path, text: &str) -> Result<Ply> {
    let bad = |msg: String| Error::format(path, msg);
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let c: Vec<f64> = tok
                    .take(3)
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(format!("line {}: bad vertex", lineno + 1)))?;
                if c.len() != 3 {
                    return Err(bad(format!("line {}: vertex needs 3 coordinates", lineno + 1)));
                }
                vertices.push(Point3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut face = Vec::new();
                for t in tok {
                    let idx: i64 = t
                        .split('/')
                        .next()
                        .unwrap_or_default()
                        .parse()
                        .map_err(|_| bad(format!("line {}: bad face index `{t}`", lineno + 1)))?;
                    // 1-based; negative counts back from the latest vertex
                    let abs = if idx < 0 { vertices.len() as i64 + idx } else { idx - 1 };
                    face.push(abs);
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    Ok(Ply { vertices, faces })
}

fn triangulate(path: &Path, raw: Ply) -> Result<TriangleMesh> {
    let n = raw.vertices.len() as i64;
    let mut faces = Vec::new();
    for f in &raw.faces {
        if f.len() < 3 {
            return Err(Error::format(path, format!("face with {} vertices", f.len())));
        }
        if let Some(i) = f.iter().find(|&&i| i < 0 || i >= n) {
            return Err(Error::format(path, format!("face index {i} out of range for {n} vertices")));
        }
        for k in 1..f.len() - 1 {
            faces.push([f[0] as u32, f[k] as u32, f[k + 1] as u32]);
        }
    }
    TriangleMesh::new(raw.vertices, faces).map_err(|e| Error::format(path, e.to_string()))
}

/// Reads a `.ply` or `.obj` triangle mesh.
pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    let text = read_text(path)?;
    let raw = match extension(path).as_str() {
        "ply" => parse_ply(path, &text)?,
        "obj" => parse_obj(path, &text)?,
        other => return Err(Error::format(path, format!("unsupported mesh extension `{other}`"))),
    };
    triangulate(path, raw)
}

/// Writes a mesh as ASCII PLY or OBJ depending on the extension.
pub fn write_mesh(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    match extension(path).as_str() {
        "ply" => write_text(path, |w| {
            writeln!(w, "ply\nformat ascii 1.0")?;
            writeln!(w, "element vertex {}", mesh.vertices().len())?;
            writeln!(w, "property double x\nproperty double y\nproperty double z")?;
            writeln!(w, "element face {}", mesh.faces().len())?;
            writeln!(w, "property list uchar int vertex_indices\nend_header")?;
            for v in mesh.vertices() {
                writeln!(w, "{} {} {}", v.x, v.y, v.z)?;
            }
            for f in mesh.faces() {
                writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
            }
            Ok(())
        }),
        "obj" => write_text(path, |w| {
            for v in mesh.vertices() {
                writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
            }
            for f in mesh.faces() {
                writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
            }
            Ok(())
        }),
        other => Err(Error::format(path, format!("unsupported mesh extension `{other}`"))),
    }
}

/// Reads a point set from `.ply` (vertices only) or `.xyz`.
pub fn read_points(path: &Path) -> Result<PointSet> {
    let text = read_text(path)?;
    let points = match extension(path).as_str() {
        "ply" => parse_ply(path, &text)?.vertices,
        "xyz" | "txt" => {
            let mut pts = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or_default().trim();
                if line.is_empty() {
                    continue;
                }
                let c: Vec<f64> = line
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::format(path, format!("line {}: bad point", lineno + 1)))?;
                if c.len() < 3 {
                    return Err(Error::format(path, format!("line {}: point needs 3 coordinates", lineno + 1)));
                }
                pts.push(Point3::new(c[0], c[1], c[2]));
            }
            pts
        }
        other => return Err(Error::format(path, format!("unsupported point-set extension `{other}`"))),
    };
    PointSet::new(points).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes a point set as ASCII PLY or `.xyz`.
pub fn write_points(path: &Path, points: &PointSet) -> Result<()> {
    let ply = match extension(path).as_str() {
        "ply" => true,
        "xyz" | "txt" => false,
        other => return Err(Error::format(path, format!("unsupported point-set extension `{other}`"))),
    };
    write_text(path, |w| {
        if ply {
            writeln!(w, "ply\nformat ascii 1.0\nelement vertex {}", points.len())?;
            writeln!(w, "property double x\nproperty double y\nproperty double z\nend_header")?;
        }
        for p in points.points() {
            writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
        }
        Ok(())
    })
}

fn open_image(path: &Path) -> Result<DynamicImage> {
    image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::format(path, e.to_string()))
}

/// Reads a 16-bit millimeter depth PNG into meters.
pub fn read_depth_png(path: &Path) -> Result<DepthMap> {
    let img = match open_image(path)? {
        DynamicImage::ImageLuma16(img) => img,
        other => {
            return Err(Error::format(
                path,
                format!("depth must be single-channel 16-bit, got {:?}", other.color()),
            ))
        }
    };
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(|mm| mm as f64 / 1000.0).collect();
    DepthMap::new(w as usize, h as usize, data).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes depth as a 16-bit millimeter PNG. Depths round to the nearest
/// millimeter and saturate at 65.535 m.
pub fn write_depth_png(path: &Path, depth: &DepthMap) -> Result<()> {
    let raw: Vec<u16> = depth
        .data()
        .iter()
        .map(|&d| (d * 1000.0).round().clamp(0.0, u16::MAX as f64) as u16)
        .collect();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(depth.width() as u32, depth.height() as u32, raw)
        .ok_or_else(|| Error::format(path, "depth buffer does not match its size"))?;
    img.save(path).map_err(|e| Error::format(path, e.to_string()))
}

/// Reads an object mask; any nonzero pixel belongs to the object.
pub fn read_mask_png(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let img = open_image(path)?.into_luma16();
    let (w, h) = img.dimensions();
    Ok((w as usize, h as usize, img.into_raw().into_iter().map(|v| v != 0).collect()))
}

pub fn write_mask_png(path: &Path, width: usize, height: usize, mask: &[bool]) -> Result<()> {
    let raw: Vec<u8> = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    let img: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_raw(width as u32, height as u32, raw)
        .ok_or_else(|| Error::format(path, "mask buffer does not match its size"))?;
    img.save(path).map_err(|e| Error::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    #[test]
    fn mesh_round_trips_through_ply_and_obj() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = synthetic::mug(true);
        for name in ["m.ply", "m.obj"] {
            let p = dir.path().join(name);
            write_mesh(&p, &mesh).unwrap();
            assert_eq!(read_mesh(&p).unwrap(), mesh, "{name}");
        }
    }

    #[test]
    fn quads_are_fan_triangulated() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("quad.obj");
        fs::write(&p, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 -1\n").unwrap();
        let m = read_mesh(&p).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
        assert!((m.surface_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ply_with_extra_properties() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.ply");
        let text = "ply\nformat ascii 1.0\ncomment x\nelement vertex 3\nproperty float nx\nproperty float x\nproperty float y\nproperty float z\n\
                    element face 1\nproperty list uchar int vertex_indices\nend_header\n9 0 0 0\n9 1 0 0\n9 0 1 0\n3 0 1 2\n";
        fs::write(&p, text).unwrap();
        let m = read_mesh(&p).unwrap();
        assert_eq!(m.vertices()[1], Point3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn bad_files_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.ply");
        fs::write(&p, "ply\nformat binary_little_endian 1.0\nend_header\n").unwrap();
        let err = read_mesh(&p).unwrap_err();
        assert!(err.to_string().contains("bad.ply"));
        assert!(matches!(read_mesh(&dir.path().join("missing.obj")), Err(Error::Io { .. })));
        let p = dir.path().join("oob.obj");
        fs::write(&p, "v 0 0 0\nf 1 2 3\n").unwrap();
        assert!(matches!(read_mesh(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn points_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let pts = PointSet::new(vec![Point3::new(0.1, -2.5, 1e-17), Point3::new(3.0, 4.0, 5.0)]).unwrap();
        for name in ["p.ply", "p.xyz"] {
            let p = dir.path().join(name);
            write_points(&p, &pts).unwrap();
            assert_eq!(read_points(&p).unwrap(), pts);
        }
    }

    #[test]
    fn depth_png_is_millimeters() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        let depth = DepthMap::new(3, 2, vec![0.0, 0.5, 1.234, 2.0, 0.001, 65.535]).unwrap();
        write_depth_png(&p, &depth).unwrap();
        let back = read_depth_png(&p).unwrap();
        assert_eq!(back.width(), 3);
        assert_eq!(back.data(), depth.data());

        let rgb = dir.path().join("rgb.png");
        image::RgbImage::new(2, 2).save(&rgb).unwrap();
        assert!(matches!(read_depth_png(&rgb), Err(Error::Format { .. })));
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        let mask = vec![true, false, false, true];
        write_mask_png(&p, 2, 2, &mask).unwrap();
        assert_eq!(read_mask_png(&p).unwrap(), (2, 2, mask));
    }
}

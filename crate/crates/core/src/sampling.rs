//! Area-weighted surface sampling and the sample-count convergence study.
//!
//! # Random streams
//!
//! All sampling uses ChaCha8 seeded with `seed_from_u64(seed)`. Each surface
//! that is sampled within one evaluation gets its own ChaCha stream id (see
//! [`sample_surface_stream`]), so adding or reordering surfaces never shifts
//! the samples drawn for another surface. ChaCha8 output is identical across
//! platforms, which makes every sampled metric bit-reproducible.

use std::io::Write;

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointSet, TriangleMesh};
use crate::shape_metrics::{chamfer_distance, reconstruction_fscore};

pub use crate::spatial::{brute_force_nearest_distance, SpatialIndex};

/// Default number of surface samples per shape for every metric evaluation.
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Stream id used for the ground-truth surface in an evaluation.
pub const GT_STREAM: u64 = 0;
/// Stream id used for the predicted surface in an evaluation.
pub const PRED_STREAM: u64 = 1;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `n` points uniformly over the mesh surface (stream 0).
pub fn sample_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointSet> {
    sample_surface_stream(mesh, n, seed, 0)
}

/// Draws `n` points uniformly over the mesh surface from ChaCha stream
/// `stream` of `seed`.
///
/// Triangles are picked with probability proportional to area through a
/// cumulative-area table; the point inside the triangle is uniform in
/// barycentric coordinates.
pub fn sample_surface_stream(
    mesh: &TriangleMesh,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::InvalidGeometry("sample count must be positive".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces().len());
    let mut total = 0.0;
    for f in 0..mesh.faces().len() {
        total += mesh.triangle_area(f);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::DegenerateMesh("total surface area is zero".into()));
    }
    let mut rng = stream_rng(seed, stream);
    let points = (0..n)
        .map(|_| {
            let target = rng.random::<f64>() * total;
            let face = cumulative
                .partition_point(|&c| c <= target)
                .min(cumulative.len() - 1);
            let [a, b, c] = mesh.triangle(face);
            let mut r1: f64 = rng.random();
            let mut r2: f64 = rng.random();
            if r1 + r2 > 1.0 {
                r1 = 1.0 - r1;
                r2 = 1.0 - r2;
            }
            a + (b - a) * r1 + (c - a) * r2
        })
        .collect::<Vec<Point3<f64>>>();
    Ok(PointSet::from_iter(points))
}

/// Exact nearest distance from `query` into the index.
pub fn nearest_distance(index: &SpatialIndex, query: &Point3<f64>) -> Result<f64> {
    index.nearest_distance(query)
}

/// One row of a convergence study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n_samples: usize,
    pub chamfer_m: f64,
    pub fscore: f64,
}

/// Chamfer distance and F-score as a function of the number of surface
/// samples. Each row samples both surfaces afresh with `n` points; rows
/// come back in the order of `n_list`.
pub fn convergence_study(
    gt_mesh: &TriangleMesh,
    pred_mesh: &TriangleMesh,
    n_list: &[usize],
    delta: f64,
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    if n_list.is_empty() {
        return Err(Error::Config("convergence study needs at least one sample count".into()));
    }
    n_list
        .iter()
        .map(|&n| {
            let gt = sample_surface_stream(gt_mesh, n, seed, GT_STREAM)?;
            let pred = sample_surface_stream(pred_mesh, n, seed, PRED_STREAM)?;
            Ok(ConvergenceRow {
                n_samples: n,
                chamfer_m: chamfer_distance(&gt, &pred)?,
                fscore: reconstruction_fscore(&gt, &pred, delta)?.fscore,
            })
        })
        .collect()
}

/// `count` log-spaced sample counts from `lo` to `hi` inclusive, rounded and
/// deduplicated.
pub fn log_spaced_counts(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count <= 1 || lo >= hi {
        return vec![lo.max(1)];
    }
    let (a, b) = ((lo.max(1) as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize)
        .collect();
    out.dedup();
    out
}

/// Writes rows as CSV with header `n_samples,chamfer_m,fscore`.
pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::format("<csv>", e.to_string());
    w.write_record(["n_samples", "chamfer_m", "fscore"])
        .map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.n_samples.to_string(),
            r.chamfer_m.to_string(),
            r.fscore.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn unit_square() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn square_mean_converges_to_centroid() {
        for seed in [0, 1, 99] {
            let pts = sample_surface(&unit_square(), 10_000, seed).unwrap();
            assert_eq!(pts.len(), 10_000);
            let c = pts.centroid().unwrap();
            assert!((c - Point3::new(0.5, 0.5, 0.0)).norm() < 0.02);
        }
    }

    #[test]
    fn single_sample_lies_on_triangle_plane() {
        let tri = TriangleMesh::new(
            vec![
                Point3::new(0.1, 0.2, 0.3),
                Point3::new(1.0, -0.5, 0.7),
                Point3::new(-0.3, 0.9, 1.1),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let [a, b, c] = tri.triangle(0);
        let normal: Vector3<f64> = (b - a).cross(&(c - a)).normalize();
        let p = sample_surface(&tri, 1, 5).unwrap().points()[0];
        assert!(normal.dot(&(p - a)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_per_seed_and_stream() {
        let m = unit_square();
        assert_eq!(
            sample_surface(&m, 500, 42).unwrap(),
            sample_surface(&m, 500, 42).unwrap()
        );
        assert_ne!(
            sample_surface_stream(&m, 500, 42, 0).unwrap(),
            sample_surface_stream(&m, 500, 42, 1).unwrap()
        );
    }

    #[test]
    fn zero_area_mesh_is_rejected() {
        let flat = TriangleMesh::new(
            vec![
                Point3::origin(),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(2.0, 0.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(
            sample_surface(&flat, 10, 0),
            Err(Error::DegenerateMesh(_))
        ));
    }

    #[test]
    fn far_prediction_scores_zero() {
        let m = unit_square();
        let far = crate::geometry::apply_transform(
            &crate::geometry::RigidTransform::from_translation(Vector3::new(1000.0, 0.0, 0.0)),
            &m,
        );
        let rows = convergence_study(&m, &far, &[10, 100], 0.01, 3).unwrap();
        assert!(rows.iter().all(|r| r.fscore == 0.0));
        assert_eq!(rows.iter().map(|r| r.n_samples).collect::<Vec<_>>(), [10, 100]);
    }

    #[test]
    fn log_spacing() {
        assert_eq!(log_spaced_counts(100, 1_000_000, 5), [100, 1000, 10_000, 100_000, 1_000_000]);
        assert_eq!(log_spaced_counts(7, 7, 3), [7]);
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_convergence_csv(
            &[ConvergenceRow {
                n_samples: 100,
                chamfer_m: 0.5,
                fscore: 1.0,
            }],
            &mut buf,
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n_samples,chamfer_m,fscore\n100,0.5,1\n");
    }
}

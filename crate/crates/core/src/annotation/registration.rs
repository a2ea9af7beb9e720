//! Closed-form rigid alignment and point-to-point ICP.

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{nearest_rotation, PointSet, RigidTransform};
use crate::spatial::SpatialIndex;

/// Relative size of the second singular value of the centered source
/// points below which the configuration counts as collinear.
const DEGENERACY_RATIO: f64 = 1e-9;

/// Least-squares rotation and translation (no scale) taking each `source`
/// point onto its paired `target` point (Kabsch).
pub fn rigid_alignment(pairs: &[(Point3<f64>, Point3<f64>)]) -> Result<RigidTransform> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateCorrespondences(format!(
            "need at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    let n = pairs.len() as f64;
    let (cs, ct) = pairs.iter().fold((Vector3::zeros(), Vector3::zeros()), |(a, b), (s, t)| {
        (a + s.coords, b + t.coords)
    });
    let (cs, ct) = (cs / n, ct / n);

    let mut cov = Matrix3::zeros();
    let mut spread = Matrix3::zeros();
    for (s, t) in pairs {
        let (ds, dt) = (s.coords - cs, t.coords - ct);
        cov += dt * ds.transpose();
        spread += ds * ds.transpose();
    }
    let mut sv = spread.symmetric_eigenvalues();
    sv.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    if !(sv[0] > 0.0) || sv[1] <= DEGENERACY_RATIO * sv[0] {
        return Err(Error::DegenerateCorrespondences(
            "source points are coincident or collinear".into(),
        ));
    }

    let rotation = nearest_rotation(&cov);
    let translation = ct - rotation * cs;
    RigidTransform::new(rotation, translation)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Correspondences farther apart than this are dropped (meters).
    pub reject_distance: f64,
    /// Stop once the RMS displacement of the source between two iterations
    /// falls below this (meters).
    pub convergence_tol: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            reject_distance: 0.02,
            convergence_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcpResult {
    /// Maps source coordinates onto the target.
    pub transform: RigidTransform,
    pub iterations: usize,
    pub converged: bool,
    /// Mean correspondence distance at the initial pose.
    pub initial_residual: f64,
    /// Mean correspondence distance at the returned pose.
    pub final_residual: f64,
    /// Correspondences kept at the returned pose.
    pub inliers: usize,
}

fn correspondences(
    source: &[Point3<f64>],
    target: &SpatialIndex,
    pose: &RigidTransform,
    reject: f64,
) -> (Vec<(Point3<f64>, Point3<f64>)>, f64) {
    let mut pairs = Vec::with_capacity(source.len());
    let mut sum = 0.0;
    for s in source {
        let moved = pose.transform_point(s);
        let (i, d) = target.nearest(&moved).expect("target is non-empty");
        if d <= reject {
            pairs.push((*s, target.points()[i]));
            sum += d;
        }
    }
    let mean = if pairs.is_empty() { f64::INFINITY } else { sum / pairs.len() as f64 };
    (pairs, mean)
}

fn rms_displacement(points: &[Point3<f64>], a: &RigidTransform, b: &RigidTransform) -> f64 {
    let sum: f64 = points
        .iter()
        .map(|p| (a.transform_point(p) - b.transform_point(p)).norm_squared())
        .sum();
    (sum / points.len() as f64).sqrt()
}

/// Point-to-point ICP. Alternates nearest-neighbor correspondences (pairs
/// beyond `reject_distance` dropped) with [`rigid_alignment`] until the
/// pose stops moving or the iteration budget runs out.
pub fn icp_align(source: &PointSet, target: &SpatialIndex, init: &RigidTransform, params: &IcpParams) -> Result<IcpResult> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let src = source.points();
    let mut pose = *init;
    let (mut pairs, initial_residual) = correspondences(src, target, &pose, params.reject_distance);
    if pairs.is_empty() {
        return Err(Error::NoOverlap);
    }
    let mut residual = initial_residual;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iterations {
        iterations += 1;
        let next = rigid_alignment(&pairs)?;
        let moved = rms_displacement(src, &pose, &next);
        let (next_pairs, next_residual) = correspondences(src, target, &next, params.reject_distance);
        if next_pairs.is_empty() {
            return Err(Error::NoOverlap);
        }
        pose = next;
        pairs = next_pairs;
        residual = next_residual;
        if moved < params.convergence_tol {
            converged = true;
            break;
        }
    }
    Ok(IcpResult {
        transform: pose,
        iterations,
        converged,
        initial_residual,
        final_residual: residual,
        inliers: pairs.len(),
    })
}

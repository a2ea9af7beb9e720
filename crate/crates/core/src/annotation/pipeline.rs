//! End-to-end annotation of one object from a depth sequence with seed boxes.

use std::f64::consts::PI;

use log::{debug, info};
use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::carving::{voxel_carve, DEFAULT_CARVE_MARGIN, DEFAULT_VOXEL_SIZE};
use super::depth::{backproject, DepthFrame};
use super::registration::{icp_align, IcpParams, IcpResult};
use super::surface::{extract_mesh, tight_bbox, DEFAULT_SMOOTHING_ITERATIONS, DEFAULT_SMOOTHING_LAMBDA};
use crate::box_metrics::Box3;
use crate::error::{Error, Result};
use crate::geometry::{Category, PointSet, RigidTransform, TriangleMesh};
use crate::spatial::SpatialIndex;

/// Default number of extra rotated copies for symmetric categories.
pub const DEFAULT_SYM_REPLICAS: usize = 35;
/// Default enlargement of the box when cropping points for ICP (meters).
pub const DEFAULT_CROP_MARGIN: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnotationParams {
    pub icp: IcpParams,
    /// Skip pose refinement and trust the seed poses.
    pub refine: bool,
    pub crop_margin: f64,
    pub voxel_size: f64,
    pub carve_margin: f64,
    pub smoothing_iterations: usize,
    pub smoothing_lambda: f64,
    pub sym_replicas: usize,
}

impl Default for AnnotationParams {
    fn default() -> Self {
        Self {
            icp: IcpParams::default(),
            refine: true,
            crop_margin: DEFAULT_CROP_MARGIN,
            voxel_size: DEFAULT_VOXEL_SIZE,
            carve_margin: DEFAULT_CARVE_MARGIN,
            smoothing_iterations: DEFAULT_SMOOTHING_ITERATIONS,
            smoothing_lambda: DEFAULT_SMOOTHING_LAMBDA,
            sym_replicas: DEFAULT_SYM_REPLICAS,
        }
    }
}

impl AnnotationParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !positive(self.voxel_size) {
            return Err(Error::Config(format!("voxel_size must be positive, got {}", self.voxel_size)));
        }
        if !nonneg(self.carve_margin) || !nonneg(self.crop_margin) {
            return Err(Error::Config("carve_margin and crop_margin must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.smoothing_lambda) {
            return Err(Error::Config(format!(
                "smoothing_lambda must be in [0, 1], got {}",
                self.smoothing_lambda
            )));
        }
        if !positive(self.icp.reject_distance) || !nonneg(self.icp.convergence_tol) {
            return Err(Error::Config("ICP reject distance must be positive and tolerance non-negative".into()));
        }
        Ok(())
    }
}

/// One object in one depth sequence.
#[derive(Clone, Debug)]
pub struct AnnotationInput {
    pub frames: Vec<DepthFrame>,
    /// Object → camera seed pose for every frame.
    pub seed_poses: Vec<RigidTransform>,
    /// Seed box in the object frame.
    pub seed_box: Box3,
    pub category: Category,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameDiagnostics {
    pub frame: usize,
    pub backprojected_points: usize,
    pub points_in_box: usize,
    pub icp: Option<IcpResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationDiagnostics {
    pub params: AnnotationParams,
    pub category: String,
    pub frames: Vec<FrameDiagnostics>,
    pub replicas: usize,
    pub accumulated_points: usize,
    pub voxel_dims: [usize; 3],
    pub voxels_total: usize,
    pub voxels_occupied: usize,
    pub mesh_vertices: usize,
    pub mesh_faces: usize,
}

#[derive(Clone, Debug)]
pub struct Annotation {
    pub mesh: TriangleMesh,
    /// Tight object-frame box of `mesh`.
    pub tight_box: Box3,
    /// Refined object → camera pose per frame.
    pub box_poses: Vec<RigidTransform>,
    pub points: PointSet,
    pub diagnostics: AnnotationDiagnostics,
}

fn check_lengths(frames: &[DepthFrame], poses: &[RigidTransform]) -> Result<()> {
    if frames.len() != poses.len() {
        return Err(Error::Config(format!("{} box poses for {} frames", poses.len(), frames.len())));
    }
    Ok(())
}

fn cropped_object_points(cloud: &PointSet, pose: &RigidTransform, bounds: &Box3) -> Vec<Point3<f64>> {
    let to_object = pose.inverse();
    cloud
        .points()
        .iter()
        .map(|p| to_object.transform_point(p))
        .filter(|p| bounds.contains(p))
        .collect()
}

fn replicate_about_axis(points: &[Point3<f64>], category: &Category, replicas: usize) -> Vec<Point3<f64>> {
    let axis = category.axis().into_inner();
    let mut out = points.to_vec();
    out.reserve(points.len() * replicas);
    for k in 1..=replicas {
        let angle = 2.0 * PI * k as f64 / (replicas + 1) as f64;
        let r = RigidTransform::from_axis_angle(&axis, angle);
        out.extend(points.iter().map(|p| r.transform_point(p)));
    }
    out
}

/// Backprojects every frame, moves the points into the object frame, keeps
/// those inside `bounds`, and for symmetric categories appends
/// `sym_replicas` copies rotated about the symmetry axis by `2πk/(r+1)`.
pub fn accumulate_points(
    frames: &[DepthFrame],
    box_poses: &[RigidTransform],
    bounds: &Box3,
    category: &Category,
    sym_replicas: usize,
) -> Result<PointSet> {
    check_lengths(frames, box_poses)?;
    let per_frame: Vec<Vec<Point3<f64>>> = frames
        .par_iter()
        .zip(box_poses.par_iter())
        .map(|(f, pose)| cropped_object_points(&backproject(f), pose, bounds))
        .collect();
    let cropped: Vec<Point3<f64>> = per_frame.into_iter().flatten().collect();
    if cropped.is_empty() {
        return Err(Error::NoPointsInBox);
    }
    let replicas = if category.symmetric { sym_replicas } else { 0 };
    Ok(PointSet::from_iter(replicate_about_axis(&cropped, category, replicas)))
}

/// Refines the seed poses frame by frame. Each frame's cropped points are
/// registered against the union of all other frames' cropped points (at
/// their current poses); a refined pose is used by the frames after it.
/// Frames with no points near the box keep their seed.
pub fn refine_box_poses(
    frames: &[DepthFrame],
    seed_poses: &[RigidTransform],
    seed_box: &Box3,
    params: &AnnotationParams,
) -> Result<(Vec<RigidTransform>, Vec<Option<IcpResult>>)> {
    check_lengths(frames, seed_poses)?;
    let crop = seed_box.expanded(params.crop_margin)?;
    let clouds: Vec<PointSet> = frames.par_iter().map(backproject).collect();
    let mut poses = seed_poses.to_vec();
    let mut results = vec![None; frames.len()];
    if frames.len() < 2 || !params.refine {
        return Ok((poses, results));
    }
    for k in 0..frames.len() {
        let source = PointSet::from_iter(cropped_object_points(&clouds[k], &poses[k], &crop));
        let target: Vec<Point3<f64>> = (0..frames.len())
            .filter(|&j| j != k)
            .flat_map(|j| cropped_object_points(&clouds[j], &poses[j], &crop))
            .collect();
        if source.is_empty() || target.is_empty() {
            debug!("frame {k}: nothing to register, keeping seed pose");
            continue;
        }
        let index = SpatialIndex::from_points(target);
        let res = icp_align(&source, &index, &RigidTransform::identity(), &params.icp)?;
        debug!(
            "frame {k}: ICP {} iterations, residual {:.6} -> {:.6}",
            res.iterations, res.initial_residual, res.final_residual
        );
        poses[k] = poses[k] * res.transform.inverse();
        results[k] = Some(res);
    }
    Ok((poses, results))
}

/// Runs pose refinement, point accumulation, voxel carving, mesh extraction
/// and the tight box. Errors carry the name of the stage that failed.
pub fn annotate_sequence(input: &AnnotationInput, params: &AnnotationParams) -> Result<Annotation> {
    params.validate()?;
    input.category.validate()?;
    check_lengths(&input.frames, &input.seed_poses)?;

    let (box_poses, icp) =
        refine_box_poses(&input.frames, &input.seed_poses, &input.seed_box, params).map_err(|e| e.in_stage("icp"))?;

    let points = accumulate_points(
        &input.frames,
        &box_poses,
        &input.seed_box,
        &input.category,
        params.sym_replicas,
    )
    .map_err(|e| e.in_stage("accumulate"))?;
    let replicas = if input.category.symmetric { params.sym_replicas } else { 0 };

    let frames: Vec<FrameDiagnostics> = input
        .frames
        .iter()
        .zip(&box_poses)
        .zip(icp)
        .enumerate()
        .map(|(i, ((f, pose), icp))| {
            let cloud = backproject(f);
            FrameDiagnostics {
                frame: i,
                backprojected_points: cloud.len(),
                points_in_box: cropped_object_points(&cloud, pose, &input.seed_box).len(),
                icp,
            }
        })
        .collect();

    let grid = voxel_carve(
        &input.seed_box,
        &box_poses,
        &input.frames,
        params.voxel_size,
        params.carve_margin,
    )
    .map_err(|e| e.in_stage("carve"))?;
    info!(
        "carved {} of {} voxels ({} remain)",
        grid.len() - grid.occupied_count(),
        grid.len(),
        grid.occupied_count()
    );

    let mesh = extract_mesh(&grid, params.smoothing_iterations, params.smoothing_lambda)
        .map_err(|e| e.in_stage("extract"))?;
    let tight_box = tight_bbox(&mesh).map_err(|e| e.in_stage("bbox"))?;

    let diagnostics = AnnotationDiagnostics {
        params: *params,
        category: input.category.name.clone(),
        frames,
        replicas,
        accumulated_points: points.len(),
        voxel_dims: grid.dims(),
        voxels_total: grid.len(),
        voxels_occupied: grid.occupied_count(),
        mesh_vertices: mesh.vertices().len(),
        mesh_faces: mesh.faces().len(),
    };
    Ok(Annotation {
        mesh,
        tight_box,
        box_poses,
        points,
        diagnostics,
    })
}

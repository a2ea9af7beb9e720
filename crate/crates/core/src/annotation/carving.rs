//! Voxel carving inside an oriented box.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use super::depth::DepthFrame;
use crate::box_metrics::Box3;
use crate::error::{Error, Result};
use crate::geometry::RigidTransform;

/// Default voxel edge length (meters).
pub const DEFAULT_VOXEL_SIZE: f64 = 0.005;
/// Default carving margin in front of the measured surface (meters).
pub const DEFAULT_CARVE_MARGIN: f64 = 0.005;

/// Dense boolean lattice covering a box in the object frame.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    bounds: Box3,
    resolution: f64,
    dims: [usize; 3],
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    /// All-occupied grid with `ceil(extent / resolution)` voxels per axis,
    /// anchored at the box's minimum corner.
    pub fn new(bounds: Box3, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidGeometry(format!("voxel resolution must be positive, got {resolution}")));
        }
        let extent = bounds.half_extents() * 2.0;
        // a hair of slack so 0.10 / 0.005 stays 20 rather than 21
        let dims = [0, 1, 2].map(|a| ((extent[a] / resolution) - 1e-9).ceil().max(1.0) as usize);
        let count = dims[0] * dims[1] * dims[2];
        Ok(Self {
            bounds,
            resolution,
            dims,
            occupied: vec![true; count],
        })
    }

    pub fn bounds(&self) -> &Box3 {
        &self.bounds
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn is_occupied(&self, i: usize, j: usize, k: usize) -> bool {
        self.occupied[self.index(i, j, k)]
    }

    pub fn set_occupied(&mut self, i: usize, j: usize, k: usize, value: bool) {
        let idx = self.index(i, j, k);
        self.occupied[idx] = value;
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupied
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    /// Object-frame center of voxel `(i, j, k)`.
    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        self.bounds.min() + Vector3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * self.resolution
    }

    fn centers(&self) -> impl Iterator<Item = (usize, Point3<f64>)> + '_ {
        let [nx, ny, nz] = self.dims;
        (0..nz).flat_map(move |k| {
            (0..ny).flat_map(move |j| (0..nx).map(move |i| (self.index(i, j, k), self.voxel_center(i, j, k))))
        })
    }

    /// Clears every voxel marked in `free`.
    pub fn carve(&mut self, free: &[bool]) {
        for (o, &f) in self.occupied.iter_mut().zip(free) {
            if f {
                *o = false;
            }
        }
    }
}

/// Voxels seen as free space by one frame: the voxel center projects onto a
/// valid depth pixel and lies more than `margin` in front of the measured
/// surface.
pub fn free_space(grid: &OccupancyGrid, box_pose: &RigidTransform, frame: &DepthFrame, margin: f64) -> Vec<bool> {
    let (w, h) = (frame.depth.width() as i64, frame.depth.height() as i64);
    let mut free = vec![false; grid.len()];
    for (idx, center) in grid.centers() {
        let p = box_pose.transform_point(&center);
        let Some((u, v)) = frame.intrinsics.project(&p) else {
            continue;
        };
        let (u, v) = (u.round() as i64, v.round() as i64);
        if u < 0 || v < 0 || u >= w || v >= h {
            continue;
        }
        let measured = frame.depth.get(u as usize, v as usize);
        if measured > 0.0 && p.z < measured - margin {
            free[idx] = true;
        }
    }
    free
}

/// Starts from an all-occupied grid over `bounds` and clears every voxel
/// that any frame observes as free. `box_poses[f]` maps the object frame
/// into the camera of `frames[f]`. The result does not depend on frame
/// order.
pub fn voxel_carve(
    bounds: &Box3,
    box_poses: &[RigidTransform],
    frames: &[DepthFrame],
    resolution: f64,
    margin: f64,
) -> Result<OccupancyGrid> {
    if box_poses.len() != frames.len() {
        return Err(Error::Config(format!(
            "{} box poses for {} frames",
            box_poses.len(),
            frames.len()
        )));
    }
    let mut grid = OccupancyGrid::new(*bounds, resolution)?;
    let free_sets: Vec<Vec<bool>> = frames
        .par_iter()
        .zip(box_poses.par_iter())
        .map(|(frame, pose)| free_space(&grid, pose, frame, margin))
        .collect();
    for free in &free_sets {
        grid.carve(free);
    }
    Ok(grid)
}

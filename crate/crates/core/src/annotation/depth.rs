use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointSet, RigidTransform};

/// Pinhole intrinsics. Pixel `(u, v)` is column `u`, row `v`; integer
/// coordinates are pixel centers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let k = Self { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy].iter().all(|v| v.is_finite());
        if !finite || self.fx == 0.0 || self.fy == 0.0 {
            return Err(Error::InvalidGeometry(format!("intrinsics {self:?} are not invertible")));
        }
        Ok(())
    }

    /// From a 3×3 camera matrix `[[fx, s, cx], [0, fy, cy], [0, 0, 1]]`.
    /// Skew must be zero.
    pub fn from_matrix(k: &Matrix3<f64>) -> Result<Self> {
        if k[(0, 1)] != 0.0 || k[(1, 0)] != 0.0 || k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 || k[(2, 2)] != 1.0 {
            return Err(Error::InvalidGeometry(format!("unsupported camera matrix {k:?}")));
        }
        Self::new(k[(0, 0)], k[(1, 1)], k[(0, 2)], k[(1, 2)])
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Ray through pixel `(u, v)` scaled to unit depth.
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// Continuous pixel coordinates of a camera-frame point with `z > 0`.
    pub fn project(&self, p: &Point3<f64>) -> Option<(f64, f64)> {
        (p.z > 0.0).then(|| (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }
}

/// Row-major metric depth image; 0 marks an invalid pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidGeometry(format!(
                "depth buffer holds {} values for a {width}x{height} image",
                data.len()
            )));
        }
        if let Some(d) = data.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::InvalidGeometry(format!("invalid depth value {d}")));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Depth at column `u`, row `v`.
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|&&d| d > 0.0).count()
    }
}

/// One depth observation of a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthFrame {
    pub depth: DepthMap,
    pub intrinsics: Intrinsics,
    /// Optional per-pixel object mask, same layout as `depth`.
    pub mask: Option<Vec<bool>>,
    /// Maps sequence (world) coordinates into this camera's frame.
    pub camera_pose: RigidTransform,
}

impl DepthFrame {
    pub fn new(depth: DepthMap, intrinsics: Intrinsics, mask: Option<Vec<bool>>, camera_pose: RigidTransform) -> Result<Self> {
        intrinsics.validate()?;
        if let Some(m) = &mask {
            if m.len() != depth.data.len() {
                return Err(Error::InvalidGeometry("mask and depth sizes differ".into()));
            }
        }
        Ok(Self {
            depth,
            intrinsics,
            mask,
            camera_pose,
        })
    }

    fn pixel_used(&self, idx: usize) -> bool {
        self.depth.data[idx] > 0.0 && self.mask.as_ref().is_none_or(|m| m[idx])
    }
}

/// Inverse projection of every valid (and, when a mask is present, masked)
/// pixel, in the camera frame. Row-major pixel order.
pub fn backproject(frame: &DepthFrame) -> PointSet {
    let (w, h) = (frame.depth.width, frame.depth.height);
    let mut points = Vec::with_capacity(frame.depth.valid_count());
    for v in 0..h {
        for u in 0..w {
            let idx = v * w + u;
            if frame.pixel_used(idx) {
                let z = frame.depth.data[idx];
                points.push(Point3::from(frame.intrinsics.ray(u as f64, v as f64) * z));
            }
        }
    }
    PointSet::from_iter(points)
}

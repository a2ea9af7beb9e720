//! Chamfer distance and thresholded reconstruction precision/recall/F-score.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointSet, RigidTransform, Transformable, TriangleMesh};
use crate::sampling::{sample_surface_stream, SpatialIndex, GT_STREAM, PRED_STREAM};

/// Distance threshold used by the protocol presets (1 cm).
pub const DEFAULT_FSCORE_DELTA: f64 = 0.01;

// Below this many queries the rayon split costs more than it saves.
const PARALLEL_MIN: usize = 4096;

/// Frame in which a reconstruction is scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Canonical object frame; poses are ignored.
    Object,
    /// Both shapes placed by their poses before scoring.
    #[default]
    World,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frame::Object => "object",
            Frame::World => "world",
        })
    }
}

impl FromStr for Frame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "object" => Ok(Frame::Object),
            "world" => Ok(Frame::World),
            other => Err(Error::Config(format!(
                "unknown frame `{other}` (expected `object` or `world`)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionScore {
    pub recall: f64,
    pub precision: f64,
    pub fscore: f64,
    pub delta: f64,
    pub frame: Frame,
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn harmonic_fscore(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Nearest distance from every point of `from` into `into`, in input order.
fn directed_distances(from: &PointSet, into: &SpatialIndex) -> Vec<f64> {
    let query = |p| into.nearest_distance(p).expect("index is non-empty");
    if from.len() >= PARALLEL_MIN {
        from.points().par_iter().map(query).collect()
    } else {
        from.points().iter().map(query).collect()
    }
}

fn check_nonempty(a: &PointSet, b: &PointSet) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        Err(Error::EmptyPointSet)
    } else {
        Ok(())
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Symmetric chamfer distance: half the mean nearest distance from `s` to
/// `s_tilde` plus half the mean in the other direction. Not squared.
pub fn chamfer_distance(s: &PointSet, s_tilde: &PointSet) -> Result<f64> {
    check_nonempty(s, s_tilde)?;
    let (idx, idx_tilde) = (SpatialIndex::build(s), SpatialIndex::build(s_tilde));
    let forward = directed_distances(s, &idx_tilde);
    let backward = directed_distances(s_tilde, &idx);
    Ok(0.5 * mean(&forward) + 0.5 * mean(&backward))
}

/// Recall is the fraction of `s` (ground truth) strictly closer than
/// `delta` to `s_tilde`; precision is the fraction of `s_tilde` strictly
/// closer than `delta` to `s`.
pub fn reconstruction_fscore(s: &PointSet, s_tilde: &PointSet, delta: f64) -> Result<ReconstructionScore> {
    check_nonempty(s, s_tilde)?;
    let (idx, idx_tilde) = (SpatialIndex::build(s), SpatialIndex::build(s_tilde));
    score_from_distances(
        &directed_distances(s, &idx_tilde),
        &directed_distances(s_tilde, &idx),
        delta,
        Frame::Object,
    )
}

fn validate_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(format!("F-score distance must be positive, got {delta}")))
    }
}

fn score_from_distances(forward: &[f64], backward: &[f64], delta: f64, frame: Frame) -> Result<ReconstructionScore> {
    validate_delta(delta)?;
    let fraction = |d: &[f64]| d.iter().filter(|&&x| x < delta).count() as f64 / d.len() as f64;
    let recall = fraction(forward);
    let precision = fraction(backward);
    Ok(ReconstructionScore {
        recall,
        precision,
        fscore: harmonic_fscore(precision, recall),
        delta,
        frame,
    })
}

/// A shape to be scored: a mesh (sampled on demand) or a raw point set
/// (used as-is).
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Mesh(TriangleMesh),
    Points(PointSet),
}

impl Shape {
    /// Surface samples in the object frame.
    pub fn surface_points(&self, n: usize, seed: u64, stream: u64) -> Result<PointSet> {
        match self {
            Shape::Mesh(m) => sample_surface_stream(m, n, seed, stream),
            Shape::Points(p) => Ok(p.clone()),
        }
    }

    pub fn vertices(&self) -> &[nalgebra::Point3<f64>] {
        match self {
            Shape::Mesh(m) => m.vertices(),
            Shape::Points(p) => p.points(),
        }
    }
}

impl From<TriangleMesh> for Shape {
    fn from(m: TriangleMesh) -> Self {
        Shape::Mesh(m)
    }
}

impl From<PointSet> for Shape {
    fn from(p: PointSet) -> Self {
        Shape::Points(p)
    }
}

/// Score and chamfer distance of one reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeEvaluation {
    pub score: ReconstructionScore,
    pub chamfer: f64,
}

/// Parameters shared by every reconstruction evaluation of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeEvalParams {
    pub delta: f64,
    pub frame: Frame,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ShapeEvalParams {
    fn default() -> Self {
        Self {
            delta: DEFAULT_FSCORE_DELTA,
            frame: Frame::World,
            samples: crate::sampling::DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}

/// Scores `pred` against `gt`.
///
/// Meshes are sampled with `n` points in their object frame (ground truth
/// on stream [`GT_STREAM`], prediction on [`PRED_STREAM`]). In the world
/// frame the samples are then moved by their poses; in the object frame
/// the poses are ignored.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_reconstruction(
    gt: &Shape,
    gt_pose: &RigidTransform,
    pred: &Shape,
    pred_pose: &RigidTransform,
    delta: f64,
    frame: Frame,
    n: usize,
    seed: u64,
) -> Result<ShapeEvaluation> {
    validate_delta(delta)?;
    let mut s = gt.surface_points(n, seed, GT_STREAM)?;
    let mut s_tilde = pred.surface_points(n, seed, PRED_STREAM)?;
    if frame == Frame::World {
        s = s.transformed(gt_pose);
        s_tilde = s_tilde.transformed(pred_pose);
    }
    check_nonempty(&s, &s_tilde)?;
    let (idx, idx_tilde) = (SpatialIndex::build(&s), SpatialIndex::build(&s_tilde));
    let forward = directed_distances(&s, &idx_tilde);
    let backward = directed_distances(&s_tilde, &idx);
    Ok(ShapeEvaluation {
        score: score_from_distances(&forward, &backward, delta, frame)?,
        chamfer: 0.5 * mean(&forward) + 0.5 * mean(&backward),
    })
}

/// [`evaluate_reconstruction`] with a parameter bundle.
pub fn evaluate_reconstruction_with(
    gt: &Shape,
    gt_pose: &RigidTransform,
    pred: &Shape,
    pred_pose: &RigidTransform,
    params: &ShapeEvalParams,
) -> Result<ShapeEvaluation> {
    evaluate_reconstruction(
        gt,
        gt_pose,
        pred,
        pred_pose,
        params.delta,
        params.frame,
        params.samples,
        params.seed,
    )
}

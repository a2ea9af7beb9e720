//! Evaluation toolkit for categorical 6D pose and shape estimation.
//!
//! Metric kernels (pose errors, exact oriented-box IoU, chamfer distance
//! and F-score), threshold-based precision aggregation with report
//! writers, and a depth-based annotation pipeline that produces ground-truth
//! meshes and tight boxes from seeded depth sequences.

pub mod aggregation;
pub mod annotation;
pub mod box_metrics;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod sampling;
pub mod shape_metrics;
mod spatial;
pub mod synthetic;

pub use error::{Error, Result};
pub use geometry::{Category, PointSet, RigidTransform, TriangleMesh};

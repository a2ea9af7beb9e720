//! Chamfer distance and F-score between two meshes, in the object and the
//! world frame.
//!
//!     cargo run --example shape_metrics

use catpose::geometry::RigidTransform;
use catpose::shape_metrics::{evaluate_reconstruction, Frame, Shape, DEFAULT_FSCORE_DELTA};
use catpose::synthetic;
use nalgebra::Vector3;

fn main() -> catpose::Result<()> {
    let gt = Shape::Mesh(synthetic::mug(true));
    let pred = Shape::Mesh(synthetic::mug(false));
    let gt_pose = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 0.7));
    let pred_pose = RigidTransform::from_translation(Vector3::new(0.004, 0.0, 0.7));

    for frame in [Frame::Object, Frame::World] {
        let e = evaluate_reconstruction(&gt, &gt_pose, &pred, &pred_pose, DEFAULT_FSCORE_DELTA, frame, 10_000, 0)?;
        println!(
            "{frame:?}: chamfer {:.5} m, precision {:.3}, recall {:.3}, F {:.3}",
            e.chamfer, e.score.precision, e.score.recall, e.score.fscore
        );
    }
    Ok(())
}

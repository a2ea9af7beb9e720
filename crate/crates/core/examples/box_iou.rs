//! Exact IoU between oriented boxes, and the symmetric variant.
//!
//!     cargo run --example box_iou

use std::f64::consts::FRAC_PI_4;

use catpose::box_metrics::{iou_aabb, iou_obb, iou_obb_symmetric, Box3, DEFAULT_SYMMETRY_STEPS};
use catpose::geometry::{Category, RigidTransform};
use nalgebra::{Point3, Vector3};

fn main() -> catpose::Result<()> {
    let unit = Box3::centered(Vector3::new(1.0, 1.0, 1.0))?;
    let id = RigidTransform::identity();

    let shifted = RigidTransform::from_translation(Vector3::new(0.5, 0.0, 0.0));
    println!("half-overlapping cubes:   {:.6} (1/3)", iou_obb(&unit, &id, &unit, &shifted));

    let turned = RigidTransform::from_axis_angle(&Vector3::z(), FRAC_PI_4);
    println!("cube turned 45° about z:  {:.6} (1/√2 = {:.6})", iou_obb(&unit, &id, &unit, &turned), 0.5f64.sqrt());

    let a = Box3::from_min_max(Point3::new(0.0, 0.0, 0.0), Point3::new(2.0, 1.0, 1.0))?;
    let b = Box3::from_min_max(Point3::new(1.0, 0.0, 0.0), Point3::new(3.0, 1.0, 1.0))?;
    println!("axis-aligned slabs:       {:.6}", iou_aabb(&a, &b));

    // a can-like box, estimated with a 30° spin about its axis
    let can = Box3::centered(Vector3::new(0.066, 0.12, 0.066))?;
    let spun = RigidTransform::from_axis_angle(&Vector3::y(), 30f64.to_radians());
    let cat = Category::builtin("can");
    println!("spun can, plain IoU:      {:.6}", iou_obb(&can, &id, &can, &spun));
    println!(
        "spun can, symmetric IoU:  {:.6}",
        iou_obb_symmetric(&can, &id, &can, &spun, &cat, DEFAULT_SYMMETRY_STEPS)
    );
    Ok(())
}

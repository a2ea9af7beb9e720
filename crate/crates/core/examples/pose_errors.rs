//! Rotation and translation errors, with and without a symmetry axis.
//!
//!     cargo run --example pose_errors

use catpose::geometry::{rotation_error, rotation_error_symmetric, translation_error, Category, RigidTransform};
use nalgebra::Vector3;

fn main() {
    let gt = RigidTransform::from_translation(Vector3::new(0.1, -0.05, 0.8))
        * RigidTransform::from_axis_angle(&Vector3::new(1.0, 1.0, 0.0), 0.4);

    // spin about the object's y axis, then tilt it by 5 degrees
    let spin = RigidTransform::from_axis_angle(&Vector3::y(), 70f64.to_radians());
    let tilt = RigidTransform::from_axis_angle(&Vector3::x(), 5f64.to_radians());
    let est = RigidTransform::from_translation(Vector3::new(0.01, 0.0, 0.0)) * gt * spin * tilt;

    println!("translation error: {:.4} m", translation_error(&gt, &est));
    println!("rotation error:    {:.3}°", rotation_error(&gt, &est));
    for name in ["mug", "bottle"] {
        let cat = Category::builtin(name);
        println!(
            "{name:<7} (symmetric: {}): {:.3}°",
            cat.symmetric,
            rotation_error_symmetric(&gt, &est, &cat)
        );
    }
}

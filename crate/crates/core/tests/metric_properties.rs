use catpose::geometry::{
    rotation_error, rotation_error_symmetric, translation_error, Category, PointSet, RigidTransform,
};
use catpose::shape_metrics::{chamfer_distance, reconstruction_fscore};
use nalgebra::{Point3, Vector3};
use proptest::prelude::*;

fn pose() -> impl Strategy<Value = RigidTransform> {
    (
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        0.0f64..std::f64::consts::PI,
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
    )
        .prop_filter("axis", |(a, _, _)| a.0 * a.0 + a.1 * a.1 + a.2 * a.2 > 1e-3)
        .prop_map(|(a, angle, t)| {
            RigidTransform::from_translation(Vector3::new(t.0, t.1, t.2))
                * RigidTransform::from_axis_angle(&Vector3::new(a.0, a.1, a.2), angle)
        })
}

fn cloud(n: usize) -> impl Strategy<Value = PointSet> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..n)
        .prop_map(|v| PointSet::new(v.into_iter().map(|(x, y, z)| Point3::new(x, y, z)).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rotation_error_is_a_metric(a in pose(), b in pose(), c in pose()) {
        let ab = rotation_error(&a, &b);
        prop_assert!((ab - rotation_error(&b, &a)).abs() < 1e-9);
        prop_assert!((0.0..=180.0).contains(&ab));
        prop_assert!(ab <= rotation_error(&a, &c) + rotation_error(&c, &b) + 1e-7);
        prop_assert!(rotation_error(&a, &a) < 1e-9);
    }

    #[test]
    fn pose_errors_are_invariant_to_a_shared_motion(a in pose(), b in pose(), g in pose()) {
        // a world motion applied to both poses
        let (ga, gb) = (g * a, g * b);
        prop_assert!((rotation_error(&a, &b) - rotation_error(&ga, &gb)).abs() < 1e-7);
        // an object-frame change applied to both poses leaves the rotation error unchanged
        prop_assert!((rotation_error(&a, &b) - rotation_error(&(a * g), &(b * g))).abs() < 1e-7);
        prop_assert!((translation_error(&a, &b) - translation_error(&b, &a)).abs() < 1e-15);
    }

    #[test]
    fn symmetric_error_ignores_spin(a in pose(), b in pose(), s in 0.0f64..6.3, t in 0.0f64..6.3) {
        let cat = Category::builtin("bottle");
        let spin = |x: f64| RigidTransform::from_axis_angle(&Vector3::y(), x);
        let base = rotation_error_symmetric(&a, &b, &cat);
        let spun = rotation_error_symmetric(&(a * spin(s)), &(b * spin(t)), &cat);
        prop_assert!((base - spun).abs() < 1e-6);
        prop_assert!(base <= rotation_error(&a, &b) + 1e-9);
    }

    #[test]
    fn chamfer_is_symmetric_and_zero_on_self(a in cloud(60), b in cloud(60)) {
        let ab = chamfer_distance(&a, &b).unwrap();
        prop_assert!((ab - chamfer_distance(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(chamfer_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn fscore_is_bounded_and_monotone_in_delta(a in cloud(60), b in cloud(60), d in 0.01f64..0.5) {
        let small = reconstruction_fscore(&a, &b, d).unwrap();
        let large = reconstruction_fscore(&a, &b, 2.0 * d).unwrap();
        prop_assert!((0.0..=1.0).contains(&small.fscore));
        prop_assert!(small.precision <= large.precision && small.recall <= large.recall);
        prop_assert_eq!(reconstruction_fscore(&a, &a, d).unwrap().fscore, 1.0);
    }
}

#[test]
fn chamfer_of_shifted_singletons() {
    let a = PointSet::new(vec![Point3::origin()]).unwrap();
    let b = PointSet::new(vec![Point3::new(0.3, 0.4, 0.0)]).unwrap();
    assert!((chamfer_distance(&a, &b).unwrap() - 0.5).abs() < 1e-15);
    // strict threshold: a distance of exactly delta does not count
    assert_eq!(reconstruction_fscore(&a, &b, 0.5).unwrap().fscore, 0.0);
    assert_eq!(reconstruction_fscore(&a, &b, 0.5000001).unwrap().fscore, 1.0);
}

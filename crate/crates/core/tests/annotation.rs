use std::f64::consts::PI;

use catpose::annotation::{
    accumulate_points, backproject, extract_mesh, voxel_carve, Intrinsics, OccupancyGrid, DEFAULT_SMOOTHING_ITERATIONS,
    DEFAULT_SMOOTHING_LAMBDA,
};
use catpose::box_metrics::Box3;
use catpose::geometry::{Category, RigidTransform, Transformable};
use catpose::synthetic::{self, cube_scene, CUBE_HALF_EDGE};
use nalgebra::{Point3, Vector3};

fn box_distance(p: &Point3<f64>, half: f64) -> f64 {
    let q = p.coords.map(|c| c.abs() - half);
    let outside = q.map(|c| c.max(0.0)).norm();
    outside + q.max().min(0.0)
}

#[test]
fn backprojected_cube_lies_on_its_surface() {
    let scene = cube_scene();
    for (frame, pose) in scene.frames.iter().zip(scene.box_poses()) {
        let pts = backproject(frame).transformed(&pose.inverse());
        let near: Vec<_> = pts.points().iter().filter(|p| p.coords.amax() < 0.05).collect();
        assert!(near.len() > 500);
        for p in near {
            assert!(box_distance(p, CUBE_HALF_EDGE).abs() < 1e-3, "{p:?}");
        }
    }
}

#[test]
fn smoothed_sphere_stays_round() {
    let (radius, voxel) = (0.04, 0.0025);
    let bounds = Box3::centered(Vector3::repeat(0.1)).unwrap();
    let mut grid = OccupancyGrid::new(bounds, voxel).unwrap();
    let [nx, ny, nz] = grid.dims();
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let inside = grid.voxel_center(i, j, k).coords.norm() <= radius;
                grid.set_occupied(i, j, k, inside);
            }
        }
    }
    let mesh = extract_mesh(&grid, DEFAULT_SMOOTHING_ITERATIONS, DEFAULT_SMOOTHING_LAMBDA).unwrap();
    let r: Vec<f64> = mesh.vertices().iter().map(|v| v.coords.norm()).collect();
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let std = (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / r.len() as f64).sqrt();
    assert!(std < voxel, "radial std {std}");
    assert!((mean - radius).abs() < voxel, "mean radius {mean}");
}

#[test]
fn symmetric_replicas_fill_unseen_side() {
    let (radius, height) = (0.04, 0.1);
    let mesh = synthetic::cylinder(radius, height, 96);
    let object = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 0.0));
    let intr = Intrinsics::new(200.0, 200.0, 79.5, 59.5).unwrap();
    // cameras sweep only the front half of the azimuths
    let frames: Vec<_> = (0..4)
        .map(|k| {
            let az = (-30.0 + 20.0 * k as f64).to_radians();
            let eye = Point3::new(0.4 * az.sin(), 0.15, 0.4 * az.cos());
            let cam = synthetic::look_at(eye, Point3::origin(), Vector3::y());
            synthetic::render_frame(&mesh, &object, &cam, intr, 160, 120, None)
        })
        .collect();
    let poses: Vec<_> = frames.iter().map(|f| f.camera_pose * object).collect();
    let bounds = Box3::centered(Vector3::new(0.1, 0.12, 0.1)).unwrap();

    let max_gap = |cat: &Category, replicas: usize| {
        let pts = accumulate_points(&frames, &poses, &bounds, cat, replicas).unwrap();
        let mut az: Vec<f64> = pts
            .points()
            .iter()
            .filter(|p| p.y.abs() < height / 2.0 - 1e-3)
            .map(|p| p.z.atan2(p.x))
            .collect();
        az.sort_by(f64::total_cmp);
        let wrap = az[0] + 2.0 * PI - az[az.len() - 1];
        az.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max).to_degrees()
    };
    let plain = max_gap(&Category::new("thing"), 35);
    let sym = max_gap(&Category::builtin("can"), 35);
    assert!(plain > 90.0, "unseen side should be empty, gap {plain}");
    assert!(sym < 10.0, "gap {sym}");

    let one = accumulate_points(&frames, &poses, &bounds, &Category::builtin("can"), 0).unwrap();
    let many = accumulate_points(&frames, &poses, &bounds, &Category::builtin("can"), 7).unwrap();
    assert_eq!(many.len(), 8 * one.len());
}

#[test]
fn carving_is_monotone_and_order_independent() {
    let scene = cube_scene();
    let poses = scene.box_poses();
    let carve = |idx: &[usize]| {
        let f: Vec<_> = idx.iter().map(|&i| scene.frames[i].clone()).collect();
        let p: Vec<_> = idx.iter().map(|&i| poses[i]).collect();
        voxel_carve(&scene.seed_box, &p, &f, 0.005, 0.002).unwrap()
    };
    let mut prev = carve(&[0]);
    for n in 2..=8 {
        let idx: Vec<usize> = (0..n).collect();
        let next = carve(&idx);
        for (a, b) in prev.occupancy().iter().zip(next.occupancy()) {
            assert!(!*b || *a, "adding frame {} re-occupied a voxel", n - 1);
        }
        assert!(next.occupied_count() <= prev.occupied_count());
        prev = next;
    }
    let forward = carve(&[0, 1, 2, 3, 4, 5, 6, 7]);
    let shuffled = carve(&[5, 2, 7, 0, 3, 6, 1, 4]);
    assert_eq!(forward.occupancy(), shuffled.occupancy());
    assert_eq!(forward.occupied_count(), 12 * 12 * 12);
}

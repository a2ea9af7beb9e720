//! Procedural meshes, a ray-casting depth renderer and random poses.
//!
//! These back the bundled fixtures, the runnable examples and the test
//! suites. Every generator is deterministic.

use std::f64::consts::{PI, TAU};

use nalgebra::{Point3, Rotation3, UnitQuaternion, Vector3, Vector4};
use rand::Rng;

use crate::annotation::{DepthFrame, DepthMap, Intrinsics};
use crate::box_metrics::Box3;
use crate::geometry::{RigidTransform, Transformable, TriangleMesh};

fn mesh(vertices: Vec<Point3<f64>>, faces: Vec<[u32; 3]>) -> TriangleMesh {
    TriangleMesh::new(vertices, faces).expect("generated mesh is valid")
}

/// Closed box centered at the origin, outward-facing triangles.
pub fn box_mesh(half_extents: Vector3<f64>) -> TriangleMesh {
    let h = half_extents;
    let vertices = (0..8)
        .map(|i| {
            Point3::new(
                if i & 1 != 0 { h.x } else { -h.x },
                if i & 2 != 0 { h.y } else { -h.y },
                if i & 4 != 0 { h.z } else { -h.z },
            )
        })
        .collect();
    let quads = [[1, 3, 7, 5], [0, 4, 6, 2], [2, 6, 7, 3], [0, 1, 5, 4], [4, 5, 7, 6], [0, 2, 3, 1]];
    let faces = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    mesh(vertices, faces)
}

/// Closed cylinder along +y, centered at the origin.
pub fn cylinder(radius: f64, height: f64, segments: usize) -> TriangleMesh {
    let segments = segments.max(3);
    let half = height / 2.0;
    let mut vertices = Vec::with_capacity(2 * segments + 2);
    for k in 0..segments {
        let a = TAU * k as f64 / segments as f64;
        let (x, z) = (radius * a.cos(), radius * a.sin());
        vertices.push(Point3::new(x, -half, z));
        vertices.push(Point3::new(x, half, z));
    }
    let bottom = vertices.len() as u32;
    vertices.push(Point3::new(0.0, -half, 0.0));
    vertices.push(Point3::new(0.0, half, 0.0));
    let top = bottom + 1;
    let mut faces = Vec::with_capacity(4 * segments);
    for k in 0..segments as u32 {
        let n = (k + 1) % segments as u32;
        let (b0, t0, b1, t1) = (2 * k, 2 * k + 1, 2 * n, 2 * n + 1);
        faces.push([b0, t0, t1]);
        faces.push([b0, t1, b1]);
        faces.push([bottom, b0, b1]);
        faces.push([top, t1, t0]);
    }
    mesh(vertices, faces)
}

/// UV sphere centered at the origin.
pub fn uv_sphere(radius: f64, rings: usize, segments: usize) -> TriangleMesh {
    let (rings, segments) = (rings.max(2), segments.max(3));
    let mut vertices = vec![Point3::new(0.0, radius, 0.0)];
    for r in 1..rings {
        let phi = PI * r as f64 / rings as f64;
        for s in 0..segments {
            let theta = TAU * s as f64 / segments as f64;
            vertices.push(Point3::new(
                radius * phi.sin() * theta.cos(),
                radius * phi.cos(),
                radius * phi.sin() * theta.sin(),
            ));
        }
    }
    vertices.push(Point3::new(0.0, -radius, 0.0));
    let south = vertices.len() as u32 - 1;
    let ring = |r: usize, s: usize| (1 + (r - 1) * segments + s % segments) as u32;
    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([0, ring(1, s + 1), ring(1, s)]);
        faces.push([south, ring(rings - 1, s), ring(rings - 1, s + 1)]);
    }
    for r in 1..rings - 1 {
        for s in 0..segments {
            let (a, b, c, d) = (ring(r, s), ring(r, s + 1), ring(r + 1, s), ring(r + 1, s + 1));
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    mesh(vertices, faces)
}

/// Torus in the xy-plane around the z axis.
pub fn torus(major: f64, minor: f64, major_segments: usize, minor_segments: usize) -> TriangleMesh {
    let (nu, nv) = (major_segments.max(3), minor_segments.max(3));
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let v = TAU * j as f64 / nv as f64;
            let r = major + minor * v.cos();
            vertices.push(Point3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| ((i % nu) * nv + j % nv) as u32;
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    mesh(vertices, faces)
}

/// A 10 cm tall mug: a closed cylindrical body (radius 4 cm) with an
/// optional torus handle on the +x side.
pub fn mug(with_handle: bool) -> TriangleMesh {
    let body = cylinder(0.04, 0.10, 96);
    if !with_handle {
        return body;
    }
    let handle = torus(0.025, 0.005, 48, 12)
        .transformed(&RigidTransform::from_translation(Vector3::new(0.045, 0.0, 0.0)));
    body.merged(&handle)
}

/// A mug whose handle is a thin rectangular loop instead of a torus.
pub fn mug_square_handle() -> TriangleMesh {
    let body = cylinder(0.04, 0.10, 96);
    let bar = |center: Vector3<f64>, half: Vector3<f64>| {
        box_mesh(half).transformed(&RigidTransform::from_translation(center))
    };
    body.merged(&bar(Vector3::new(0.062, 0.0, 0.0), Vector3::new(0.004, 0.03, 0.005)))
        .merged(&bar(Vector3::new(0.05, 0.026, 0.0), Vector3::new(0.012, 0.004, 0.005)))
        .merged(&bar(Vector3::new(0.05, -0.026, 0.0), Vector3::new(0.012, 0.004, 0.005)))
}

/// Rotation drawn uniformly from SO(3).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation3<f64> {
    // normalized 4D Gaussian via Box-Muller
    let mut g = || {
        let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    };
    let q = Vector4::new(g(), g(), g(), g());
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q)).to_rotation_matrix()
}

/// Random rigid pose with translation components uniform in `±max_translation`.
pub fn random_pose<R: Rng + ?Sized>(rng: &mut R, max_translation: f64) -> RigidTransform {
    let t = Vector3::new(
        rng.random_range(-max_translation..=max_translation),
        rng.random_range(-max_translation..=max_translation),
        rng.random_range(-max_translation..=max_translation),
    );
    RigidTransform::from_parts(random_rotation(rng), t)
}

/// Camera pose (world → camera) for a camera at `eye` looking at `target`,
/// with image rows running along `-up`.
pub fn look_at(eye: Point3<f64>, target: Point3<f64>, up: Vector3<f64>) -> RigidTransform {
    let z = (target - eye).normalize();
    let x = z.cross(&up).normalize();
    let y = z.cross(&x);
    let world_to_cam = nalgebra::Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    let rotation = Rotation3::from_matrix_unchecked(world_to_cam);
    RigidTransform::from_parts(rotation, -(world_to_cam * eye.coords))
}

/// A mesh placed in the camera frame for rendering.
pub struct SceneObject<'a> {
    pub mesh: &'a TriangleMesh,
    /// Object → camera.
    pub pose: RigidTransform,
}

fn ray_triangle(dir: &Vector3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Option<f64> {
    // Möller–Trumbore with the ray origin at the camera center
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-15 {
        return None;
    }
    let inv = 1.0 / det;
    let s = -a.coords;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > 0.0).then_some(t)
}

/// Renders a metric depth image by casting one ray through every pixel
/// center. Pixels that hit nothing get `background` (a fronto-parallel wall
/// at that depth) or 0 (invalid) when `background` is `None`.
pub fn render_depth(
    objects: &[SceneObject<'_>],
    intrinsics: &Intrinsics,
    width: usize,
    height: usize,
    background: Option<f64>,
) -> DepthMap {
    struct Placed {
        tris: Vec<[Point3<f64>; 3]>,
        center: Point3<f64>,
        radius: f64,
    }
    let placed: Vec<Placed> = objects
        .iter()
        .map(|o| {
            let m = o.mesh.transformed(&o.pose);
            let tris: Vec<_> = (0..m.faces().len()).map(|f| m.triangle(f)).collect();
            let n = m.vertices().len().max(1) as f64;
            let center = Point3::from(m.vertices().iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n);
            let radius = m.vertices().iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
            Placed { tris, center, radius }
        })
        .collect();
    let mut data = vec![0.0; width * height];
    for v in 0..height {
        for u in 0..width {
            let dir = intrinsics.ray(u as f64, v as f64);
            let dir_n = dir.normalize();
            let mut best = f64::INFINITY;
            for obj in &placed {
                // bounding-sphere rejection
                let oc = obj.center.coords;
                let along = oc.dot(&dir_n);
                if (oc - dir_n * along).norm_squared() > obj.radius * obj.radius {
                    continue;
                }
                for [a, b, c] in &obj.tris {
                    if let Some(t) = ray_triangle(&dir, a, b, c) {
                        best = best.min(t);
                    }
                }
            }
            // dir has unit z, so the ray parameter is the depth
            data[v * width + u] = if best.is_finite() {
                best
            } else {
                background.unwrap_or(0.0)
            };
        }
    }
    DepthMap::new(width, height, data).expect("rendered depth is valid")
}

/// Renders `mesh` at `object_pose` (object → world) from a camera with the
/// given world → camera pose, returning a complete depth frame.
pub fn render_frame(
    mesh: &TriangleMesh,
    object_pose: &RigidTransform,
    camera_pose: &RigidTransform,
    intrinsics: Intrinsics,
    width: usize,
    height: usize,
    background: Option<f64>,
) -> DepthFrame {
    let depth = render_depth(
        &[SceneObject {
            mesh,
            pose: camera_pose * object_pose,
        }],
        &intrinsics,
        width,
        height,
        background,
    );
    DepthFrame::new(depth, intrinsics, None, *camera_pose).expect("rendered frame is valid")
}

/// Unit directions toward the 8 corners of a cube, in Gray-code order so
/// consecutive views differ in one axis.
pub fn corner_directions() -> [Vector3<f64>; 8] {
    std::array::from_fn(|i| {
        let g = i ^ (i >> 1);
        let s = |bit: usize| if g & bit != 0 { 1.0 } else { -1.0 };
        Vector3::new(s(1), s(2), s(4)) / 3f64.sqrt()
    })
}

/// Half edge of the cube in [`cube_scene`] (a 6 cm cube).
pub const CUBE_HALF_EDGE: f64 = 0.03;

/// Eight noise-free depth views of a 6 cm cube in front of a wall, with a
/// 10 cm seed box around it.
pub struct CubeScene {
    pub mesh: TriangleMesh,
    /// Object → world.
    pub object_pose: RigidTransform,
    /// Seed box in the object frame.
    pub seed_box: Box3,
    pub intrinsics: Intrinsics,
    pub frames: Vec<DepthFrame>,
}

impl CubeScene {
    /// Ground-truth object → camera pose of every frame.
    pub fn box_poses(&self) -> Vec<RigidTransform> {
        self.frames.iter().map(|f| f.camera_pose * self.object_pose).collect()
    }
}

/// Renders [`CubeScene`]: 160×120 pixels, cameras 0.4 m from the cube
/// along the corner directions, background wall 1 m from every camera.
pub fn cube_scene() -> CubeScene {
    let mesh = box_mesh(Vector3::repeat(CUBE_HALF_EDGE));
    let object_pose = RigidTransform::from_axis_angle(&Vector3::new(1.0, 2.0, 3.0), 20f64.to_radians())
        * RigidTransform::from_translation(Vector3::new(0.05, -0.02, 0.01));
    let intrinsics = Intrinsics::new(180.0, 180.0, 79.5, 59.5).expect("valid intrinsics");
    let center = object_pose.transform_point(&Point3::origin());
    let frames = corner_directions()
        .iter()
        .map(|d| {
            // y-up cameras; the corner directions are never parallel to y
            let camera = look_at(center + d * 0.4, center, Vector3::y());
            render_frame(&mesh, &object_pose, &camera, intrinsics, 160, 120, Some(1.0))
        })
        .collect();
    CubeScene {
        mesh,
        object_pose,
        seed_box: Box3::centered(Vector3::repeat(0.1)).expect("valid box"),
        intrinsics,
        frames,
    }
}

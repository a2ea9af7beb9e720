//! Bounding boxes and their intersection-over-union.
//!
//! The oriented-box IoU is exact: one box is turned into a convex polytope,
//! clipped successively by the six face halfspaces of the other box, and the
//! volume of what remains is integrated with the divergence theorem.

use std::f64::consts::TAU;

use nalgebra::{Point3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Category, HasPoints, RigidTransform, Transformable};

/// Distance within which a point counts as lying on a clipping plane.
pub const PLANE_EPS: f64 = 1e-9;
/// Smallest accepted half extent (meters).
pub const MIN_HALF_EXTENT: f64 = 1e-9;
/// Default number of coarse azimuth samples per box for the symmetric IoU.
pub const DEFAULT_SYMMETRY_STEPS: usize = 36;

const GOLDEN_ITERATIONS: usize = 40;

/// Axis-aligned box in its own frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox3", into = "RawBox3")]
pub struct Box3 {
    center: Point3<f64>,
    half_extents: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawBox3 {
    center: [f64; 3],
    half_extents: [f64; 3],
}

impl TryFrom<RawBox3> for Box3 {
    type Error = Error;

    fn try_from(raw: RawBox3) -> Result<Self> {
        Box3::new(Point3::from(raw.center), Vector3::from(raw.half_extents))
    }
}

impl From<Box3> for RawBox3 {
    fn from(b: Box3) -> Self {
        RawBox3 {
            center: b.center.coords.into(),
            half_extents: b.half_extents.into(),
        }
    }
}

impl Box3 {
    pub fn new(center: Point3<f64>, half_extents: Vector3<f64>) -> Result<Self> {
        if !center.coords.iter().chain(half_extents.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidBox("non-finite value".into()));
        }
        if half_extents.iter().any(|&h| h < MIN_HALF_EXTENT) {
            return Err(Error::InvalidBox(format!(
                "half extents must be positive, got {:?}",
                half_extents.as_slice()
            )));
        }
        Ok(Self {
            center,
            half_extents,
        })
    }

    /// Box centered at the origin with the given full side lengths.
    pub fn centered(size: Vector3<f64>) -> Result<Self> {
        Self::new(Point3::origin(), size / 2.0)
    }

    pub fn from_min_max(min: Point3<f64>, max: Point3<f64>) -> Result<Self> {
        Self::new(nalgebra::center(&min, &max), (max - min) / 2.0)
    }

    pub fn center(&self) -> &Point3<f64> {
        &self.center
    }

    pub fn half_extents(&self) -> &Vector3<f64> {
        &self.half_extents
    }

    pub fn min(&self) -> Point3<f64> {
        self.center - self.half_extents
    }

    pub fn max(&self) -> Point3<f64> {
        self.center + self.half_extents
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.product()
    }

    /// Corner `i` has bit 0/1/2 set when it sits on the +x/+y/+z side.
    pub fn corners(&self) -> [Point3<f64>; 8] {
        std::array::from_fn(|i| {
            let sign = |bit: usize| if i & (1 << bit) != 0 { 1.0 } else { -1.0 };
            self.center
                + Vector3::new(
                    sign(0) * self.half_extents.x,
                    sign(1) * self.half_extents.y,
                    sign(2) * self.half_extents.z,
                )
        })
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        let d = p - self.center;
        (0..3).all(|a| d[a].abs() <= self.half_extents[a])
    }

    /// The six face halfspaces `n·x ≤ offset` whose intersection is the box.
    pub fn halfspaces(&self) -> [Plane; 6] {
        let (lo, hi) = (self.min(), self.max());
        [
            Plane::new_unchecked(Vector3::x(), hi.x),
            Plane::new_unchecked(-Vector3::x(), -lo.x),
            Plane::new_unchecked(Vector3::y(), hi.y),
            Plane::new_unchecked(-Vector3::y(), -lo.y),
            Plane::new_unchecked(Vector3::z(), hi.z),
            Plane::new_unchecked(-Vector3::z(), -lo.z),
        ]
    }

    /// Same box grown by `margin` on every side.
    pub fn expanded(&self, margin: f64) -> Result<Self> {
        Self::new(self.center, self.half_extents.add_scalar(margin))
    }
}

/// A box placed in a parent frame by a rigid pose.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub local: Box3,
    pub pose: RigidTransform,
}

impl OrientedBox {
    pub fn corners(&self) -> [Point3<f64>; 8] {
        self.local.corners().map(|c| self.pose.transform_point(&c))
    }

    pub fn volume(&self) -> f64 {
        self.local.volume()
    }
}

impl Transformable for Box3 {
    type Output = OrientedBox;

    fn transformed(&self, t: &RigidTransform) -> OrientedBox {
        OrientedBox {
            local: *self,
            pose: *t,
        }
    }
}

impl Transformable for OrientedBox {
    type Output = OrientedBox;

    fn transformed(&self, t: &RigidTransform) -> OrientedBox {
        OrientedBox {
            local: self.local,
            pose: t * &self.pose,
        }
    }
}

/// Minimal axis-aligned box containing every point. Rejects empty input and
/// inputs with zero extent along any axis.
pub fn aabb_of<G: HasPoints + ?Sized>(geometry: &G) -> Result<Box3> {
    let points = geometry.point_slice();
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    Box3::from_min_max(lo, hi)
}

/// Halfspace `normal·x ≤ offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane {
    normal: Vector3<f64>,
    offset: f64,
}

impl Plane {
    pub fn new(normal: Vector3<f64>, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len.is_finite() && len > 0.0 && offset.is_finite()) {
            return Err(Error::InvalidGeometry("plane normal must be finite and nonzero".into()));
        }
        Ok(Self {
            normal: normal / len,
            offset: offset / len,
        })
    }

    fn new_unchecked(normal: Vector3<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    pub fn normal(&self) -> &Vector3<f64> {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }

    pub fn transformed(&self, t: &RigidTransform) -> Plane {
        let normal = t.transform_vector(&self.normal);
        Plane {
            offset: self.offset + normal.dot(t.translation()),
            normal,
        }
    }
}

/// Convex polytope as a vertex list plus outward-oriented (counter-clockwise
/// seen from outside) polygonal faces.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvexPolytope {
    vertices: Vec<Point3<f64>>,
    faces: Vec<Vec<usize>>,
}

impl ConvexPolytope {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_box(b: &Box3) -> Self {
        let vertices = b.corners().to_vec();
        // corner bit layout: x = 1, y = 2, z = 4
        let faces = vec![
            vec![1, 3, 7, 5],
            vec![0, 4, 6, 2],
            vec![2, 6, 7, 3],
            vec![0, 1, 5, 4],
            vec![4, 5, 7, 6],
            vec![0, 2, 3, 1],
        ];
        Self { vertices, faces }
    }

    pub fn from_oriented_box(b: &OrientedBox) -> Self {
        Self::from_box(&b.local).transformed(&b.pose)
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| t.transform_point(v)).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Volume by the divergence theorem over fan-triangulated faces.
    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let r = self
            .vertices
            .iter()
            .fold(Vector3::zeros(), |acc, v| acc + v.coords)
            / self.vertices.len() as f64;
        let mut six_v = 0.0;
        for face in &self.faces {
            let p0 = self.vertices[face[0]].coords - r;
            for k in 1..face.len() - 1 {
                let p1 = self.vertices[face[k]].coords - r;
                let p2 = self.vertices[face[k + 1]].coords - r;
                six_v += p0.dot(&p1.cross(&p2));
            }
        }
        (six_v / 6.0).max(0.0)
    }

    /// Intersection with the halfspace. Points within [`PLANE_EPS`] of the
    /// plane count as on it.
    pub fn clip(&self, plane: &Plane) -> ConvexPolytope {
        if self.is_empty() {
            return Self::empty();
        }
        let dist: Vec<f64> = self.vertices.iter().map(|v| plane.signed_distance(v)).collect();
        if dist.iter().all(|&d| d <= PLANE_EPS) {
            return self.clone();
        }
        if dist.iter().all(|&d| d >= -PLANE_EPS) {
            return Self::empty();
        }
        let on_plane = |d: f64| d.abs() <= PLANE_EPS;

        let mut vertices = Vec::with_capacity(self.vertices.len() + 4);
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut is_cap_vertex = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if dist[i] <= PLANE_EPS {
                remap[i] = vertices.len();
                vertices.push(*v);
                is_cap_vertex.push(on_plane(dist[i]));
            }
        }

        let mut crossings: Vec<((usize, usize), usize)> = Vec::new();
        let mut faces = Vec::with_capacity(self.faces.len() + 1);
        let mut has_face_on_plane = false;
        for face in &self.faces {
            let mut out = Vec::with_capacity(face.len() + 1);
            for k in 0..face.len() {
                let (a, b) = (face[k], face[(k + 1) % face.len()]);
                if dist[a] <= PLANE_EPS {
                    out.push(remap[a]);
                }
                let crosses = (dist[a] < -PLANE_EPS && dist[b] > PLANE_EPS)
                    || (dist[a] > PLANE_EPS && dist[b] < -PLANE_EPS);
                if crosses {
                    let key = (a.min(b), a.max(b));
                    let idx = match crossings.iter().find(|(k, _)| *k == key) {
                        Some(&(_, idx)) => idx,
                        None => {
                            let t = dist[a] / (dist[a] - dist[b]);
                            let p = self.vertices[a] + (self.vertices[b] - self.vertices[a]) * t;
                            vertices.push(p);
                            is_cap_vertex.push(true);
                            crossings.push((key, vertices.len() - 1));
                            vertices.len() - 1
                        }
                    };
                    out.push(idx);
                }
            }
            if out.len() >= 3 {
                has_face_on_plane |= out.iter().all(|&i| is_cap_vertex[i]);
                faces.push(out);
            }
        }

        if !has_face_on_plane {
            let mut cap: Vec<usize> = Vec::new();
            for face in &faces {
                for &i in face {
                    if is_cap_vertex[i] && !cap.contains(&i) {
                        cap.push(i);
                    }
                }
            }
            if cap.len() >= 3 {
                faces.push(order_cap(&vertices, cap, &plane.normal));
            }
        }

        compact(vertices, faces)
    }

    /// True when every vertex lies on the inner side of every face plane.
    pub fn is_convex(&self, tol: f64) -> bool {
        self.faces.iter().all(|face| match self.face_plane(face) {
            Some(plane) => self.vertices.iter().all(|v| plane.signed_distance(v) <= tol),
            None => true,
        })
    }

    fn face_plane(&self, face: &[usize]) -> Option<Plane> {
        let p0 = self.vertices[face[0]];
        let mut normal = Vector3::zeros();
        for k in 1..face.len() - 1 {
            normal += (self.vertices[face[k]] - p0).cross(&(self.vertices[face[k + 1]] - p0));
        }
        Plane::new(normal, 0.0).ok().map(|pl| Plane {
            offset: pl.normal.dot(&p0.coords),
            normal: pl.normal,
        })
    }
}

fn order_cap(vertices: &[Point3<f64>], mut cap: Vec<usize>, normal: &Vector3<f64>) -> Vec<usize> {
    let centroid = cap.iter().fold(Vector3::zeros(), |acc, &i| acc + vertices[i].coords) / cap.len() as f64;
    let u = Unit::new_normalize(normal.cross(&least_aligned_axis(normal)));
    let v = normal.cross(&u);
    let angle = |i: usize| {
        let d = vertices[i].coords - centroid;
        d.dot(&v).atan2(d.dot(&u))
    };
    cap.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)));
    cap
}

fn least_aligned_axis(n: &Vector3<f64>) -> Vector3<f64> {
    let a = n.abs();
    if a.x <= a.y && a.x <= a.z {
        Vector3::x()
    } else if a.y <= a.z {
        Vector3::y()
    } else {
        Vector3::z()
    }
}

fn compact(vertices: Vec<Point3<f64>>, mut faces: Vec<Vec<usize>>) -> ConvexPolytope {
    let mut used = vec![usize::MAX; vertices.len()];
    let mut kept = Vec::with_capacity(vertices.len());
    for face in &mut faces {
        for i in face.iter_mut() {
            if used[*i] == usize::MAX {
                used[*i] = kept.len();
                kept.push(vertices[*i]);
            }
            *i = used[*i];
        }
    }
    ConvexPolytope {
        vertices: kept,
        faces,
    }
}

/// Volume of the intersection of two posed boxes.
pub fn intersection_volume(box_a: &Box3, pose_a: &RigidTransform, box_b: &Box3, pose_b: &RigidTransform) -> f64 {
    let relative = pose_a.inverse() * *pose_b;
    let mut poly = ConvexPolytope::from_box(box_b).transformed(&relative);
    for plane in box_a.halfspaces() {
        poly = poly.clip(&plane);
        if poly.is_empty() {
            return 0.0;
        }
    }
    poly.volume()
}

/// Exact IoU of two oriented boxes. Box `b` is clipped against the faces of
/// box `a`, working in `a`'s frame.
pub fn iou_obb(box_a: &Box3, pose_a: &RigidTransform, box_b: &Box3, pose_b: &RigidTransform) -> f64 {
    let inter = intersection_volume(box_a, pose_a, box_b, pose_b);
    let (va, vb) = (box_a.volume(), box_b.volume());
    let inter = inter.min(va).min(vb);
    (inter / (va + vb - inter)).clamp(0.0, 1.0)
}

/// IoU of two axis-aligned boxes sharing one frame.
pub fn iou_aabb(a: &Box3, b: &Box3) -> f64 {
    let (lo, hi) = (a.min().sup(&b.min()), a.max().inf(&b.max()));
    let overlap = hi - lo;
    if overlap.iter().any(|&o| o <= 0.0) {
        return 0.0;
    }
    let inter = overlap.product();
    (inter / (a.volume() + b.volume() - inter)).clamp(0.0, 1.0)
}

/// IoU of the world-frame axis-aligned boxes of two already posed shapes.
pub fn iou_aabb_plus<A, B>(gt_world: &A, pred_world: &B) -> Result<f64>
where
    A: HasPoints + ?Sized,
    B: HasPoints + ?Sized,
{
    Ok(iou_aabb(&aabb_of(gt_world)?, &aabb_of(pred_world)?))
}

/// Oriented-box IoU that ignores rotations about the category's symmetry
/// axis.
///
/// Both boxes are spun about the symmetry axis of their own frame and the
/// best overlap is kept: a coarse `steps × steps` azimuth grid locates the
/// basin, then nested golden-section searches refine both azimuths. The
/// result never falls below [`iou_obb`], and it does not change when either
/// pose is rotated about its own symmetry axis. Non-symmetric categories
/// get plain [`iou_obb`].
pub fn iou_obb_symmetric(
    box_a: &Box3,
    pose_a: &RigidTransform,
    box_b: &Box3,
    pose_b: &RigidTransform,
    cat: &Category,
    steps: usize,
) -> f64 {
    if !cat.symmetric {
        return iou_obb(box_a, pose_a, box_b, pose_b);
    }
    let steps = steps.max(1);
    let axis = cat.axis().into_inner();
    let spin = |pose: &RigidTransform, angle: f64| *pose * RigidTransform::from_axis_angle(&axis, angle);
    let f = |alpha: f64, beta: f64| iou_obb(box_a, &spin(pose_a, alpha), box_b, &spin(pose_b, beta));
    let step = TAU / steps as f64;

    // Best over beta for a fixed alpha.
    let inner = |alpha: f64| -> (f64, f64) {
        let (mut best_beta, mut best) = (0.0, f64::NEG_INFINITY);
        for k in 0..steps {
            let beta = k as f64 * step;
            let v = f(alpha, beta);
            if v > best {
                (best_beta, best) = (beta, v);
            }
        }
        if best <= 0.0 || steps == 1 {
            return (best_beta, best.max(0.0));
        }
        golden_max(|b| f(alpha, b), best_beta - step, best_beta + step, (best_beta, best))
    };

    let (mut best_alpha, mut best) = (0.0, f64::NEG_INFINITY);
    for k in 0..steps {
        let alpha = k as f64 * step;
        let (_, v) = inner(alpha);
        if v > best {
            (best_alpha, best) = (alpha, v);
        }
    }
    if best <= 0.0 || steps == 1 {
        return best.max(0.0);
    }
    let (_, refined) = golden_max(|a| inner(a).1, best_alpha - step, best_alpha + step, (best_alpha, best));
    refined.clamp(0.0, 1.0)
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`. Returns the
/// best point seen, including `start`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, start: (f64, f64)) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = start;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 > best.1 {
            best = (x1, f1);
        }
        if f2 > best.1 {
            best = (x2, f2);
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn unit_cube() -> Box3 {
        Box3::centered(Vector3::new(1.0, 1.0, 1.0)).unwrap()
    }

    #[test]
    fn aabb_examples() {
        let b = aabb_of(&vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 2.0, 3.0)]).unwrap();
        assert_eq!(*b.center(), Point3::new(0.5, 1.0, 1.5));
        assert_eq!(*b.half_extents(), Vector3::new(0.5, 1.0, 1.5));
        assert!(matches!(
            aabb_of(&vec![Point3::new(1.0, 1.0, 1.0); 3]),
            Err(Error::InvalidBox(_))
        ));
        let mesh = crate::synthetic::box_mesh(Vector3::new(0.5, 0.5, 0.5));
        assert_eq!(*aabb_of(&mesh).unwrap().half_extents(), Vector3::new(0.5, 0.5, 0.5));
        assert!(matches!(aabb_of(&Vec::<Point3<f64>>::new()), Err(Error::EmptyPointSet)));
    }

    #[test]
    fn box_polytope_is_outward_and_convex() {
        let p = ConvexPolytope::from_box(&Box3::new(Point3::new(0.1, 0.2, 0.3), Vector3::new(0.3, 0.2, 0.1)).unwrap());
        assert!(p.is_convex(1e-12));
        assert!((p.volume() - 8.0 * 0.3 * 0.2 * 0.1).abs() < 1e-15);
    }

    #[test]
    fn clip_examples() {
        let cube = ConvexPolytope::from_box(&unit_cube());
        let clipped = cube.clip(&Plane::new(Vector3::x(), 0.25).unwrap());
        assert!((clipped.volume() - 0.75).abs() < 1e-12);
        assert!(clipped.is_convex(1e-9));
        let all = cube.clip(&Plane::new(Vector3::x(), 5.0).unwrap());
        assert!((all.volume() - cube.volume()).abs() < 1e-12);
        let none = cube.clip(&Plane::new(Vector3::x(), -0.6).unwrap());
        assert!(none.is_empty());
        assert_eq!(none.volume(), 0.0);
    }

    #[test]
    fn clip_through_corner_diagonal() {
        let cube = ConvexPolytope::from_box(&unit_cube());
        // keeps the half-space x + y + z <= 0: exactly half the cube
        let half = cube.clip(&Plane::new(Vector3::new(1.0, 1.0, 1.0), 0.0).unwrap());
        assert!((half.volume() - 0.5).abs() < 1e-12);
        // x + y + z >= 1 cuts off a corner tetrahedron with legs of 0.5
        let corner = cube.clip(&Plane::new(-Vector3::new(1.0, 1.0, 1.0), -1.0).unwrap());
        assert!((corner.volume() - 0.5f64.powi(3) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn clip_along_existing_face_keeps_volume() {
        let cube = ConvexPolytope::from_box(&unit_cube());
        let same = cube.clip(&Plane::new(Vector3::x(), 0.5).unwrap());
        assert!((same.volume() - 1.0).abs() < 1e-12);
        let flat = cube.clip(&Plane::new(-Vector3::x(), -0.5).unwrap());
        assert_eq!(flat.volume(), 0.0);
    }

    #[test]
    fn iou_examples() {
        let c = unit_cube();
        let id = RigidTransform::identity();
        assert!((iou_obb(&c, &id, &c, &id) - 1.0).abs() < 1e-12);
        let shifted = RigidTransform::from_translation(Vector3::new(0.5, 0.0, 0.0));
        assert!((iou_obb(&c, &id, &c, &shifted) - 1.0 / 3.0).abs() < 1e-9);
        let rotated = RigidTransform::from_axis_angle(&Vector3::z(), FRAC_PI_4);
        let inter = intersection_volume(&c, &id, &c, &rotated);
        assert!((inter - 2.0 * (2f64.sqrt() - 1.0)).abs() < 1e-9);
        assert!((iou_obb(&c, &id, &c, &rotated) - 1.0 / 2f64.sqrt()).abs() < 1e-6);
        let far = RigidTransform::from_translation(Vector3::new(5.0, 0.0, 0.0));
        assert_eq!(iou_obb(&c, &id, &c, &far), 0.0);
    }

    #[test]
    fn nested_boxes() {
        let big = Box3::centered(Vector3::new(2.0, 2.0, 2.0)).unwrap();
        let small = Box3::centered(Vector3::new(1.0, 1.0, 1.0)).unwrap();
        let id = RigidTransform::identity();
        let r = RigidTransform::from_axis_angle(&Vector3::new(1.0, 2.0, 3.0), 0.7);
        assert!((iou_obb(&big, &id, &small, &r) - 1.0 / 8.0).abs() < 1e-12);
        assert!((iou_obb(&small, &r, &big, &id) - 1.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn aabb_plus_examples() {
        let cube = crate::synthetic::box_mesh(Vector3::new(0.5, 0.5, 0.5));
        assert_eq!(iou_aabb_plus(&cube, &cube).unwrap(), 1.0);
        let shifted = cube.transformed(&RigidTransform::from_translation(Vector3::new(0.5, 0.0, 0.0)));
        assert!((iou_aabb_plus(&cube, &shifted).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let rot = RigidTransform::from_axis_angle(&Vector3::z(), FRAC_PI_4);
        let rotated = cube.transformed(&rot);
        let plus = iou_aabb_plus(&cube, &rotated).unwrap();
        // rotated AABB is sqrt2 x sqrt2 x 1 and contains the unit cube
        assert!((plus - 0.5).abs() < 1e-12);
        let c = unit_cube();
        let true_iou = iou_obb(&c, &RigidTransform::identity(), &c, &rot);
        assert!((plus - true_iou).abs() > 0.1);
    }

    #[test]
    fn symmetric_iou_restores_alignment() {
        let bottle = Category::builtin("bottle");
        let b = Box3::centered(Vector3::new(0.06, 0.2, 0.06)).unwrap();
        let id = RigidTransform::identity();
        let quarter = RigidTransform::from_axis_angle(&Vector3::y(), std::f64::consts::FRAC_PI_2);
        assert!(iou_obb_symmetric(&b, &id, &b, &quarter, &bottle, 360) >= 0.999);
        let eighth = RigidTransform::from_axis_angle(&Vector3::y(), FRAC_PI_4);
        let plain = iou_obb(&b, &id, &b, &eighth);
        assert!((plain - 1.0 / 2f64.sqrt()).abs() < 1e-6);
        let sym = iou_obb_symmetric(&b, &id, &b, &eighth, &bottle, DEFAULT_SYMMETRY_STEPS);
        assert!(sym > 1.0 - 1e-6);
    }

    #[test]
    fn symmetric_iou_delegates_for_asymmetric_categories() {
        let laptop = Category::builtin("laptop");
        let b = Box3::centered(Vector3::new(0.3, 0.02, 0.2)).unwrap();
        let r = RigidTransform::from_axis_angle(&Vector3::y(), 0.4);
        let id = RigidTransform::identity();
        assert_eq!(iou_obb_symmetric(&b, &id, &b, &r, &laptop, 36), iou_obb(&b, &id, &b, &r));
    }

    #[test]
    fn box_serde_rejects_degenerate() {
        let ok: Box3 = serde_json::from_str(r#"{"center":[0,0,0],"half_extents":[1,1,1]}"#).unwrap();
        assert_eq!(ok.volume(), 8.0);
        assert!(serde_json::from_str::<Box3>(r#"{"center":[0,0,0],"half_extents":[1,0,1]}"#).is_err());
    }
}

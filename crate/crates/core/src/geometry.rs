//! Core 3D types, rigid transform algebra and pose-error metrics.
//!
//! Angles are radians internally and degrees at every public metric
//! boundary. Lengths are meters.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Point3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum deviation `‖RᵀR − I‖∞` accepted as-is for a rotation matrix.
pub const ORTHONORMAL_TOL: f64 = 1e-9;
/// Rotations within this deviation (e.g. read from files with few digits)
/// are projected onto the nearest rotation; beyond it they are rejected.
pub const ORTHONORMAL_REPAIR_TOL: f64 = 1e-6;

/// A proper rigid transform `x ↦ R·x + t`.
///
/// Used for object poses (object frame to camera/world frame) and for
/// camera poses. The rotation is always orthonormal with determinant +1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform, validating that `rotation` is a proper rotation.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidTransform("non-finite entry".into()));
        }
        let deviation = orthonormality_deviation(&rotation);
        let det = rotation.determinant();
        if det <= 0.0 {
            return Err(Error::InvalidTransform(format!(
                "rotation determinant {det} is not positive"
            )));
        }
        let rotation = if deviation < ORTHONORMAL_TOL {
            rotation
        } else if deviation < ORTHONORMAL_REPAIR_TOL {
            nearest_rotation(&rotation)
        } else {
            return Err(Error::InvalidTransform(format!(
                "rotation is not orthonormal (deviation {deviation:e})"
            )));
        };
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn from_rotation(rotation: Rotation3<f64>) -> Self {
        Self {
            rotation: rotation.into_inner(),
            translation: Vector3::zeros(),
        }
    }

    /// Rotation by `angle` radians about `axis` (any nonzero vector).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let axis = Unit::new_normalize(*axis);
        Self::from_rotation(Rotation3::from_axis_angle(&axis, angle))
    }

    pub fn from_parts(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation: rotation.into_inner(),
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn to_matrix4(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Row-major 4×4 homogeneous matrix, the on-disk pose layout.
    pub fn to_row_major(&self) -> [f64; 16] {
        let m = self.to_matrix4();
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = m[(r, c)];
            }
        }
        out
    }

    pub fn from_row_major(values: &[f64]) -> Result<Self> {
        if values.len() != 16 {
            return Err(Error::InvalidTransform(format!(
                "expected 16 values, got {}",
                values.len()
            )));
        }
        let m = Matrix4::from_row_slice(values);
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::InvalidTransform(format!(
                "last row must be [0, 0, 0, 1], got {bottom:?}"
            )));
        }
        let rotation: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into();
        let translation: Vector3<f64> = m.fixed_view::<3, 1>(0, 3).into();
        Self::new(rotation, translation)
    }
}

impl Mul for RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

impl Mul<&RigidTransform> for &RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: &RigidTransform) -> RigidTransform {
        self.compose(rhs)
    }
}

impl Serialize for RigidTransform {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_row_major().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        RigidTransform::from_row_major(&values).map_err(serde::de::Error::custom)
    }
}

fn orthonormality_deviation(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).amax()
}

/// Projects a near-rotation matrix onto SO(3).
pub(crate) fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * v_t
}

/// A finite set of 3D points (meters). May be empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointSet {
    points: Vec<Point3<f64>>,
}

impl PointSet {
    pub fn new(points: Vec<Point3<f64>>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidGeometry(format!("non-finite point {p:?}")));
        }
        Ok(Self { points })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point3<f64>> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn extend(&mut self, other: PointSet) {
        self.points.extend(other.points);
    }

    pub fn centroid(&self) -> Option<Point3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self
            .points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Some(Point3::from(sum / self.points.len() as f64))
    }
}

impl FromIterator<Point3<f64>> for PointSet {
    /// Collects points without the finiteness check; use [`PointSet::new`]
    /// for untrusted input.
    fn from_iter<I: IntoIterator<Item = Point3<f64>>>(iter: I) -> Self {
        Self {
            points: iter.into_iter().collect(),
        }
    }
}

/// An indexed triangle mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[u32; 3]>) -> Result<Self> {
        if let Some(p) = vertices
            .iter()
            .find(|p| !p.coords.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidGeometry(format!("non-finite vertex {p:?}")));
        }
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v as usize >= vertices.len()) {
                return Err(Error::InvalidGeometry(format!(
                    "face {i} references a vertex out of range: {f:?}"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidGeometry(format!(
                    "face {i} repeats a vertex: {f:?}"
                )));
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub(crate) fn vertices_mut(&mut self) -> &mut [Point3<f64>] {
        &mut self.vertices
    }

    pub fn triangle(&self, face: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[face];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangle_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.triangle_area(f)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Concatenates two meshes into one (no vertex welding).
    pub fn merged(&self, other: &TriangleMesh) -> TriangleMesh {
        let offset = self.vertices.len() as u32;
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut faces = self.faces.clone();
        faces.extend(other.faces.iter().map(|f| f.map(|v| v + offset)));
        TriangleMesh { vertices, faces }
    }
}

/// Anything that exposes a point cloud view (point sets, mesh vertices).
pub trait HasPoints {
    fn point_slice(&self) -> &[Point3<f64>];
}

impl HasPoints for PointSet {
    fn point_slice(&self) -> &[Point3<f64>] {
        &self.points
    }
}

impl HasPoints for TriangleMesh {
    fn point_slice(&self) -> &[Point3<f64>] {
        &self.vertices
    }
}

impl HasPoints for [Point3<f64>] {
    fn point_slice(&self) -> &[Point3<f64>] {
        self
    }
}

impl HasPoints for Vec<Point3<f64>> {
    fn point_slice(&self) -> &[Point3<f64>] {
        self
    }
}

/// Geometry that a rigid transform can be applied to.
pub trait Transformable {
    type Output;

    fn transformed(&self, t: &RigidTransform) -> Self::Output;
}

impl Transformable for Point3<f64> {
    type Output = Point3<f64>;

    fn transformed(&self, t: &RigidTransform) -> Point3<f64> {
        t.transform_point(self)
    }
}

impl Transformable for PointSet {
    type Output = PointSet;

    fn transformed(&self, t: &RigidTransform) -> PointSet {
        PointSet {
            points: self.points.iter().map(|p| t.transform_point(p)).collect(),
        }
    }
}

impl Transformable for TriangleMesh {
    type Output = TriangleMesh;

    fn transformed(&self, t: &RigidTransform) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|p| t.transform_point(p)).collect(),
            faces: self.faces.clone(),
        }
    }
}

/// Applies `t` to a point, point set, mesh or box. Boxes come back as
/// oriented boxes.
pub fn apply_transform<G: Transformable>(t: &RigidTransform, geometry: &G) -> G::Output {
    geometry.transformed(t)
}

/// Object category with its rotational-symmetry information.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    #[serde(default)]
    pub symmetric: bool,
    #[serde(default = "default_up_axis")]
    pub symmetry_axis: Vector3<f64>,
}

fn default_up_axis() -> Vector3<f64> {
    Vector3::y()
}

/// Categories whose objects are treated as rotationally symmetric about the
/// up axis.
pub const SYMMETRIC_CATEGORIES: [&str; 3] = ["bottle", "bowl", "can"];
pub const BUILTIN_CATEGORIES: [&str; 6] = ["bottle", "bowl", "camera", "can", "laptop", "mug"];

impl Category {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            symmetric: false,
            symmetry_axis: Vector3::y(),
        }
    }

    pub fn symmetric(name: impl Into<String>, axis: Vector3<f64>) -> Result<Self> {
        let norm = axis.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "symmetry axis {axis:?} cannot be normalized"
            )));
        }
        Ok(Self {
            name: name.into(),
            symmetric: true,
            symmetry_axis: axis / norm,
        })
    }

    /// Built-in category with the default y-up convention. Unknown names
    /// yield a non-symmetric category.
    pub fn builtin(name: &str) -> Self {
        if SYMMETRIC_CATEGORIES.contains(&name) {
            Self {
                name: name.to_string(),
                symmetric: true,
                symmetry_axis: Vector3::y(),
            }
        } else {
            Self::new(name)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.symmetric && ((self.symmetry_axis.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::Config(format!(
                "category {}: symmetry axis must have unit norm",
                self.name
            )));
        }
        Ok(())
    }

    pub fn axis(&self) -> Unit<Vector3<f64>> {
        Unit::new_normalize(self.symmetry_axis)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Lookup from category name to symmetry settings; unknown names resolve to
/// non-symmetric categories.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoryTable {
    entries: BTreeMap<String, Category>,
}

impl Default for CategoryTable {
    fn default() -> Self {
        Self {
            entries: BUILTIN_CATEGORIES
                .iter()
                .map(|n| (n.to_string(), Category::builtin(n)))
                .collect(),
        }
    }
}

impl CategoryTable {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, category: Category) -> Result<()> {
        category.validate()?;
        self.entries.insert(category.name.clone(), category);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Category {
        self.entries
            .get(name)
            .cloned()
            .unwrap_or_else(|| Category::new(name))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Category> {
        self.entries.values()
    }
}

/// Euclidean distance between the two translations, in meters.
pub fn translation_error(gt: &RigidTransform, est: &RigidTransform) -> f64 {
    (gt.translation - est.translation).norm()
}

/// Geodesic angle of `R·R̃ᵀ` in degrees, in `[0, 180]`.
///
/// Evaluated as `atan2(sin θ, cos θ)` from the skew and trace parts, which
/// equals `arccos((trace − 1)/2)` but keeps full precision near 0° and 180°.
pub fn rotation_error(gt: &RigidTransform, est: &RigidTransform) -> f64 {
    rotation_angle(&(gt.rotation * est.rotation.transpose())).to_degrees()
}

/// Rotation angle of a rotation matrix, radians in `[0, π]`.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let cos2 = r.trace() - 1.0;
    let sin2 = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    )
    .norm();
    sin2.atan2(cos2)
}

/// Angle between two vectors in radians, `[0, π]`.
pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Rotation error that ignores rotation about the category's symmetry
/// axis: the angle between the two posed axes, in degrees. Falls back to
/// [`rotation_error`] for non-symmetric categories.
pub fn rotation_error_symmetric(gt: &RigidTransform, est: &RigidTransform, cat: &Category) -> f64 {
    if !cat.symmetric {
        return rotation_error(gt, est);
    }
    let axis = cat.axis();
    let a = gt.rotation * axis.into_inner();
    let b = est.rotation * axis.into_inner();
    angle_between(&a, &b).to_degrees()
}

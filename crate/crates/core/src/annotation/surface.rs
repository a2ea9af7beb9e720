//! Isosurface extraction from an occupancy grid and Laplacian smoothing.
//!
//! The occupancy becomes a scalar field (occupied = 1, free = 0) sampled at
//! voxel centers and padded with a ring of free samples, so the surface is
//! closed wherever the occupied region touches the grid border. The 0.5
//! isosurface is extracted cube by cube, each cube split into six
//! tetrahedra around its main diagonal. That split is identical for every
//! cube, so neighboring cubes agree on shared faces and the mesh is
//! watertight without the ambiguity handling of the 256-case table.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use super::carving::OccupancyGrid;
use crate::box_metrics::{aabb_of, Box3};
use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;

pub const DEFAULT_SMOOTHING_ITERATIONS: usize = 10;
pub const DEFAULT_SMOOTHING_LAMBDA: f64 = 0.5;

const ISO_LEVEL: f64 = 0.5;

// cube corners: bit 0 = +x, bit 1 = +y, bit 2 = +z
const TETRAHEDRA: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

struct PaddedField<'a> {
    grid: &'a OccupancyGrid,
    dims: [usize; 3],
}

impl PaddedField<'_> {
    fn value(&self, p: [usize; 3]) -> f64 {
        let [nx, ny, nz] = self.grid.dims();
        let (i, j, k) = (p[0], p[1], p[2]);
        if i == 0 || j == 0 || k == 0 || i > nx || j > ny || k > nz {
            return 0.0;
        }
        if self.grid.is_occupied(i - 1, j - 1, k - 1) {
            1.0
        } else {
            0.0
        }
    }

    fn id(&self, p: [usize; 3]) -> u64 {
        ((p[2] * self.dims[1] + p[1]) * self.dims[0] + p[0]) as u64
    }

    fn position(&self, p: [usize; 3]) -> Point3<f64> {
        let r = self.grid.resolution();
        self.grid.bounds().min()
            + Vector3::new(p[0] as f64 - 0.5, p[1] as f64 - 0.5, p[2] as f64 - 0.5) * r
    }
}

struct MeshBuilder {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[u32; 3]>,
    edge_vertex: HashMap<(u64, u64), u32>,
}

impl MeshBuilder {
    fn edge_point(&mut self, field: &PaddedField<'_>, a: ([usize; 3], f64), b: ([usize; 3], f64)) -> u32 {
        let (ida, idb) = (field.id(a.0), field.id(b.0));
        let key = (ida.min(idb), ida.max(idb));
        if let Some(&v) = self.edge_vertex.get(&key) {
            return v;
        }
        let t = (ISO_LEVEL - a.1) / (b.1 - a.1);
        let (pa, pb) = (field.position(a.0), field.position(b.0));
        let idx = self.vertices.len() as u32;
        self.vertices.push(pa + (pb - pa) * t);
        self.edge_vertex.insert(key, idx);
        idx
    }

    /// Adds a triangle whose normal points along `outward`.
    fn triangle(&mut self, mut tri: [u32; 3], outward: &Vector3<f64>) {
        let [a, b, c] = tri.map(|v| self.vertices[v as usize]);
        if (b - a).cross(&(c - a)).dot(outward) < 0.0 {
            tri.swap(1, 2);
        }
        self.faces.push(tri);
    }
}

/// Extracts the 0.5 isosurface of the occupancy field, then applies
/// `smoothing_iterations` rounds of uniform Laplacian smoothing with step
/// `smoothing_lambda`.
pub fn extract_mesh(grid: &OccupancyGrid, smoothing_iterations: usize, smoothing_lambda: f64) -> Result<TriangleMesh> {
    if grid.occupied_count() == 0 {
        return Err(Error::EmptyOccupancy);
    }
    if !(0.0..=1.0).contains(&smoothing_lambda) {
        return Err(Error::Config(format!("smoothing lambda must be in [0, 1], got {smoothing_lambda}")));
    }
    let [nx, ny, nz] = grid.dims();
    let field = PaddedField {
        grid,
        dims: [nx + 2, ny + 2, nz + 2],
    };
    let mut builder = MeshBuilder {
        vertices: Vec::new(),
        faces: Vec::new(),
        edge_vertex: HashMap::new(),
    };
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let corners: [([usize; 3], f64); 8] = std::array::from_fn(|c| {
                    let p = [i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1)];
                    (p, field.value(p))
                });
                if corners.iter().all(|c| c.1 > ISO_LEVEL) || corners.iter().all(|c| c.1 <= ISO_LEVEL) {
                    continue;
                }
                for tet in TETRAHEDRA {
                    polygonize_tet(&field, &mut builder, tet.map(|c| corners[c]));
                }
            }
        }
    }
    let mut mesh = TriangleMesh::new(builder.vertices, builder.faces)?;
    laplacian_smooth(&mut mesh, smoothing_iterations, smoothing_lambda);
    Ok(mesh)
}

fn polygonize_tet(field: &PaddedField<'_>, builder: &mut MeshBuilder, tet: [([usize; 3], f64); 4]) {
    let (inside, outside): (Vec<_>, Vec<_>) = tet.iter().copied().partition(|c| c.1 > ISO_LEVEL);
    if inside.is_empty() || outside.is_empty() {
        return;
    }
    let centroid = |cs: &[([usize; 3], f64)]| {
        cs.iter().fold(Vector3::zeros(), |acc, c| acc + field.position(c.0).coords) / cs.len() as f64
    };
    let outward = centroid(&outside) - centroid(&inside);
    match inside.len() {
        1 | 3 => {
            let (lone, others) = if inside.len() == 1 { (inside[0], &outside) } else { (outside[0], &inside) };
            let tri = [0, 1, 2].map(|n| builder.edge_point(field, lone, others[n]));
            builder.triangle(tri, &outward);
        }
        _ => {
            let (a, b, c, d) = (inside[0], inside[1], outside[0], outside[1]);
            let ac = builder.edge_point(field, a, c);
            let ad = builder.edge_point(field, a, d);
            let bd = builder.edge_point(field, b, d);
            let bc = builder.edge_point(field, b, c);
            builder.triangle([ac, ad, bd], &outward);
            builder.triangle([ac, bd, bc], &outward);
        }
    }
}

/// Uniform-weight Laplacian smoothing, `v ← v + λ·(mean(neighbors) − v)`,
/// applied simultaneously to all vertices. Connectivity is unchanged.
pub fn laplacian_smooth(mesh: &mut TriangleMesh, iterations: usize, lambda: f64) {
    if iterations == 0 || lambda == 0.0 {
        return;
    }
    let n = mesh.vertices().len();
    let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); n];
    for f in mesh.faces() {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            if !neighbors[a as usize].contains(&b) {
                neighbors[a as usize].push(b);
            }
            if !neighbors[b as usize].contains(&a) {
                neighbors[b as usize].push(a);
            }
        }
    }
    for _ in 0..iterations {
        let current = mesh.vertices().to_vec();
        for (v, p) in mesh.vertices_mut().iter_mut().enumerate() {
            let nb = &neighbors[v];
            if nb.is_empty() {
                continue;
            }
            let mean = nb.iter().fold(Vector3::zeros(), |acc, &u| acc + current[u as usize].coords) / nb.len() as f64;
            *p += (mean - p.coords) * lambda;
        }
    }
}

/// Tight object-frame box of a mesh (axis-aligned over its vertices).
pub fn tight_bbox(mesh: &TriangleMesh) -> Result<Box3> {
    aabb_of(mesh)
}

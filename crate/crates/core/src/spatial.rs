//! Exact nearest-neighbor search over a frozen point set.

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::geometry::PointSet;

const LEAF_SIZE: usize = 8;

#[inline]
pub(crate) fn dist2(a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

#[derive(Clone, Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Balanced k-d tree over a point set. Immutable after construction and
/// `Sync`, so one index can serve queries from many threads.
#[derive(Clone, Debug)]
pub struct SpatialIndex {
    points: Vec<Point3<f64>>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl SpatialIndex {
    pub fn build(points: &PointSet) -> Self {
        Self::from_points(points.points().to_vec())
    }

    pub fn from_points(points: Vec<Point3<f64>>) -> Self {
        let mut index = Self {
            order: (0..points.len()).collect(),
            points,
            nodes: Vec::new(),
        };
        if !index.points.is_empty() {
            index.build_node(0, index.points.len());
        }
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the axis of largest spread
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            let p = &self.points[i];
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap();
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end]
            .select_nth_unstable_by(mid - start, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Index (into the original point order) and Euclidean distance of the
    /// closest point to `query`.
    pub fn nearest(&self, query: &Point3<f64>) -> Result<(usize, f64)> {
        if self.points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, query, &mut best);
        Ok((best.0, best.1.sqrt()))
    }

    /// Exact distance from `query` to the closest indexed point.
    pub fn nearest_distance(&self, query: &Point3<f64>) -> Result<f64> {
        self.nearest(query).map(|(_, d)| d)
    }

    fn search(&self, node: usize, q: &Point3<f64>, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d = dist2(&self.points[i], q);
                    if d < best.1 {
                        *best = (i, d);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                if diff * diff <= best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

/// Nearest distance by linear scan. Reference for [`SpatialIndex`].
pub fn brute_force_nearest_distance(points: &[Point3<f64>], query: &Point3<f64>) -> Result<f64> {
    points
        .iter()
        .map(|p| dist2(p, query))
        .min_by(f64::total_cmp)
        .map(f64::sqrt)
        .ok_or(Error::EmptyPointSet)
}

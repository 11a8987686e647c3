//! Triangulated surfaces with boundary in R³.

mod forest;
mod geometry;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use forest::{BisectionForest, ForestNode};
pub use geometry::{MeshMetrics, QualityReport};

pub type Point = Vector3<f64>;

/// Relative area threshold below which a triangle counts as degenerate at
/// construction time: `area < DEGENERATE_AREA_RATIO * h(S)^2`.
pub const DEGENERATE_AREA_RATIO: f64 = 1e-14;

static GENERATION: AtomicU64 = AtomicU64::new(1);

fn next_generation() -> u64 {
    GENERATION.fetch_add(1, Ordering::Relaxed)
}

/// A simplicial 2-complex embedded in R³.
///
/// Triangles are stored with their refinement edge between local vertices 0
/// and 1 (see [`BisectionForest`]). Local edge `k` is the edge opposite local
/// vertex `k`.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    neighbors: Vec<[Option<usize>; 3]>,
    vertex_triangles: Vec<Vec<usize>>,
    boundary_edges: Vec<[usize; 2]>,
    boundary_edge_triangle: Vec<usize>,
    boundary_loops: Vec<Vec<usize>>,
    /// `(previous, next, loop)` along the boundary for boundary vertices.
    boundary_links: Vec<Option<(usize, usize, usize)>>,
    /// Index of the boundary edge leaving each boundary vertex.
    boundary_out_edge: Vec<Option<usize>>,
    interior_edges: usize,
    forest: BisectionForest,
    leaf_nodes: Vec<usize>,
    generation: u64,
}

impl SurfaceMesh {
    /// Builds a mesh from raw vertex and triangle lists.
    ///
    /// Each triangle is cyclically rotated so that its longest edge comes
    /// first; this is the initial refinement edge for bisection.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        let mut seen: HashMap<[usize; 3], usize> = HashMap::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(Error::IndexOutOfRange { index: v, count: n });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::RepeatedVertex { triangle: t });
            }
            let mut key = *tri;
            key.sort_unstable();
            if let Some(&other) = seen.get(&key) {
                return Err(Error::DuplicateTriangle { triangle: t, other });
            }
            seen.insert(key, t);
        }
        let triangles: Vec<[usize; 3]> = triangles
            .iter()
            .map(|&tri| rotate_longest_first(&vertices, tri))
            .collect();
        let forest = BisectionForest::from_roots(&triangles);
        let leaf_nodes = (0..triangles.len()).collect();
        let mesh = Self::from_parts(vertices, triangles, forest, leaf_nodes)?;
        for t in 0..mesh.triangle_count() {
            let area = mesh.triangle_area(t);
            let diameter = mesh.triangle_diameter(t);
            if !(area >= DEGENERATE_AREA_RATIO * diameter * diameter) || area == 0.0 {
                return Err(Error::DegenerateTriangle {
                    triangle: t,
                    area,
                    diameter,
                });
            }
        }
        Ok(mesh)
    }

    /// Rebuilds all connectivity from vertices, leaf triangles and forest.
    pub(crate) fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        forest: BisectionForest,
        leaf_nodes: Vec<usize>,
    ) -> Result<Self> {
        let n = vertices.len();
        let mut directed: HashMap<(usize, usize), (usize, usize)> = HashMap::with_capacity(3 * triangles.len());
        let mut undirected: HashMap<(usize, usize), u8> = HashMap::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let count = undirected.entry((a.min(b), a.max(b))).or_insert(0);
                *count += 1;
                if *count > 2 {
                    return Err(Error::NonManifoldEdge { a, b });
                }
                if directed.insert((a, b), (t, k)).is_some() {
                    return Err(Error::InconsistentOrientation { a, b });
                }
            }
        }

        let mut neighbors = vec![[None; 3]; triangles.len()];
        let mut vertex_triangles = vec![Vec::new(); n];
        let mut boundary_edges = Vec::new();
        let mut boundary_edge_triangle = Vec::new();
        let mut next_on_boundary: Vec<Option<usize>> = vec![None; n];
        let mut prev_on_boundary: Vec<Option<usize>> = vec![None; n];
        let mut boundary_out_edge = vec![None; n];
        let mut interior_edges = 0;
        for (t, tri) in triangles.iter().enumerate() {
            for (k, &v) in tri.iter().enumerate() {
                vertex_triangles[v].push(t);
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                match directed.get(&(b, a)) {
                    Some(&(other, _)) => {
                        neighbors[t][k] = Some(other);
                        if a < b {
                            interior_edges += 1;
                        }
                    }
                    None => {
                        if next_on_boundary[a].is_some() || prev_on_boundary[b].is_some() {
                            return Err(Error::NonManifoldVertex {
                                vertex: if next_on_boundary[a].is_some() { a } else { b },
                            });
                        }
                        next_on_boundary[a] = Some(b);
                        prev_on_boundary[b] = Some(a);
                        boundary_out_edge[a] = Some(boundary_edges.len());
                        boundary_edges.push([a, b]);
                        boundary_edge_triangle.push(t);
                    }
                }
            }
        }

        let mut boundary_links = vec![None; n];
        let mut boundary_loops = Vec::new();
        for &[start, _] in &boundary_edges {
            if boundary_links[start].is_some() {
                continue;
            }
            let loop_id = boundary_loops.len();
            let mut cycle = Vec::new();
            let mut v = start;
            loop {
                let next = next_on_boundary[v].ok_or(Error::NonManifoldVertex { vertex: v })?;
                let prev = prev_on_boundary[v].ok_or(Error::NonManifoldVertex { vertex: v })?;
                if boundary_links[v].is_some() {
                    return Err(Error::NonManifoldVertex { vertex: v });
                }
                boundary_links[v] = Some((prev, next, loop_id));
                cycle.push(v);
                v = next;
                if v == start {
                    break;
                }
            }
            boundary_loops.push(cycle);
        }

        Ok(SurfaceMesh {
            vertices,
            triangles,
            neighbors,
            vertex_triangles,
            boundary_edges,
            boundary_edge_triangle,
            boundary_loops,
            boundary_links,
            boundary_out_edge,
            interior_edges,
            forest,
            leaf_nodes,
            generation: next_generation(),
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    /// Moves vertices without touching connectivity. The generation stamp is
    /// kept: nodal fields stay valid.
    pub fn set_vertices(&mut self, vertices: Vec<Point>) -> Result<()> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vertices.len(),
                got: vertices.len(),
            });
        }
        self.vertices = vertices;
        Ok(())
    }

    pub fn vertices_mut(&mut self) -> &mut [Point] {
        &mut self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Neighbor across local edge `k` (opposite local vertex `k`).
    pub fn neighbor(&self, t: usize, k: usize) -> Option<usize> {
        self.neighbors[t][k]
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }

    /// Boundary edges, oriented as traversed by their triangle.
    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    /// Triangle owning boundary edge `e`.
    pub fn boundary_edge_triangle(&self, e: usize) -> usize {
        self.boundary_edge_triangle[e]
    }

    pub fn interior_edge_count(&self) -> usize {
        self.interior_edges
    }

    /// Closed boundary polygons as vertex cycles in traversal order.
    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_links[v].is_some()
    }

    /// `(previous, next)` boundary neighbors of a boundary vertex.
    pub fn boundary_neighbors(&self, v: usize) -> Option<(usize, usize)> {
        self.boundary_links[v].map(|(p, n, _)| (p, n))
    }

    /// Boundary edge leaving boundary vertex `v` (towards its next neighbor).
    pub fn boundary_out_edge(&self, v: usize) -> Option<usize> {
        self.boundary_out_edge[v]
    }

    pub fn boundary_loop_of(&self, v: usize) -> Option<usize> {
        self.boundary_links[v].map(|(_, _, l)| l)
    }

    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        self.boundary_links.iter().map(Option::is_some).collect()
    }

    pub fn forest(&self) -> &BisectionForest {
        &self.forest
    }

    /// Forest node of each triangle.
    pub fn leaf_nodes(&self) -> &[usize] {
        &self.leaf_nodes
    }

    /// Stamp identifying the current vertex numbering; it changes whenever
    /// the connectivity changes.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub(crate) fn into_parts(self) -> (Vec<Point>, Vec<[usize; 3]>, BisectionForest, Vec<usize>) {
        (self.vertices, self.triangles, self.forest, self.leaf_nodes)
    }

    /// Every undirected edge once, as `(min, max)`, in triangle order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.interior_edges + self.boundary_edges.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                match self.neighbors[t][k] {
                    Some(_) if a > b => {}
                    _ => out.push((a.min(b), a.max(b))),
                }
            }
        }
        out
    }
}

fn rotate_longest_first(vertices: &[Point], tri: [usize; 3]) -> [usize; 3] {
    let len = |k: usize| (vertices[tri[(k + 1) % 3]] - vertices[tri[k]]).norm_squared();
    let mut best = 0;
    for k in 1..3 {
        if len(k) > len(best) {
            best = k;
        }
    }
    [tri[best], tri[(best + 1) % 3], tri[(best + 2) % 3]]
}

/// Per-vertex values tied to one mesh numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField<T> {
    values: Vec<T>,
    stamp: u64,
}

impl<T> NodalField<T> {
    pub fn new(mesh: &SurfaceMesh, values: Vec<T>) -> Result<Self> {
        if values.len() != mesh.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: mesh.vertex_count(),
                got: values.len(),
            });
        }
        Ok(NodalField {
            values,
            stamp: mesh.generation(),
        })
    }

    pub fn from_fn(mesh: &SurfaceMesh, f: impl FnMut(usize) -> T) -> Self {
        NodalField {
            values: (0..mesh.vertex_count()).map(f).collect(),
            stamp: mesh.generation(),
        }
    }

    pub fn check(&self, mesh: &SurfaceMesh) -> Result<()> {
        if self.stamp != mesh.generation() || self.values.len() != mesh.vertex_count() {
            return Err(Error::StaleField {
                field: self.stamp,
                mesh: mesh.generation(),
            });
        }
        Ok(())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn stamp(&self) -> u64 {
        self.stamp
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl<T> std::ops::Index<usize> for NodalField<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64, z: f64) -> Point {
        Point::new(x, y, z)
    }

    #[test]
    fn single_triangle_has_three_boundary_edges() {
        let mesh = SurfaceMesh::new(vec![p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.)], vec![[0, 1, 2]]).unwrap();
        assert_eq!(mesh.boundary_edges().len(), 3);
        assert_eq!(mesh.interior_edge_count(), 0);
        assert_eq!(mesh.boundary_loops().len(), 1);
        assert_eq!(mesh.forest().len(), 1);
        // longest edge (1,2) moved to the front
        assert_eq!(mesh.triangle(0), [1, 2, 0]);
    }

    #[test]
    fn two_triangles_share_one_interior_edge() {
        let mesh = SurfaceMesh::new(
            vec![p(0., 0., 0.), p(1., 0., 0.), p(1., 1., 0.), p(0., 1., 0.)],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        assert_eq!(mesh.boundary_edges().len(), 4);
        assert_eq!(mesh.interior_edge_count(), 1);
        assert_eq!(mesh.edges().len(), 5);
        assert_eq!(mesh.boundary_loops()[0].len(), 4);
        for v in 0..4 {
            assert!(mesh.is_boundary_vertex(v));
        }
    }

    #[test]
    fn flipped_triangle_is_an_orientation_error() {
        let err = SurfaceMesh::new(
            vec![p(0., 0., 0.), p(1., 0., 0.), p(1., 1., 0.), p(0., 1., 0.)],
            vec![[0, 1, 2], [0, 3, 2]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InconsistentOrientation { .. }));
    }

    #[test]
    fn rejects_bad_input() {
        let verts = vec![
            p(0., 0., 0.),
            p(1., 0., 0.),
            p(0., 1., 0.),
            p(0., 0., 1.),
            p(1., 1., 1.),
        ];
        assert!(matches!(
            SurfaceMesh::new(verts.clone(), vec![[0, 1, 7]]),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            SurfaceMesh::new(verts.clone(), vec![[0, 1, 2], [1, 2, 0]]),
            Err(Error::DuplicateTriangle { .. })
        ));
        assert!(matches!(
            SurfaceMesh::new(verts.clone(), vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]),
            Err(Error::NonManifoldEdge { .. }) | Err(Error::InconsistentOrientation { .. })
        ));
        let collinear = vec![p(0., 0., 0.), p(1., 0., 0.), p(2., 0., 0.)];
        assert!(matches!(
            SurfaceMesh::new(collinear, vec![[0, 1, 2]]),
            Err(Error::DegenerateTriangle { .. })
        ));
    }

    #[test]
    fn three_triangles_on_one_edge_are_non_manifold() {
        let verts = vec![
            p(0., 0., 0.),
            p(1., 0., 0.),
            p(0., 1., 0.),
            p(0., -1., 0.),
            p(0., 0., 1.),
        ];
        let err = SurfaceMesh::new(verts, vec![[0, 1, 2], [1, 0, 3], [1, 0, 4]]).unwrap_err();
        assert!(matches!(
            err,
            Error::NonManifoldEdge { .. } | Error::InconsistentOrientation { .. }
        ));
    }

    #[test]
    fn nodal_field_detects_stale_stamp() {
        let verts = vec![p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.)];
        let a = SurfaceMesh::new(verts.clone(), vec![[0, 1, 2]]).unwrap();
        let b = SurfaceMesh::new(verts, vec![[0, 1, 2]]).unwrap();
        let f = NodalField::new(&a, vec![1.0; 3]).unwrap();
        assert!(f.check(&a).is_ok());
        assert!(f.check(&b).is_err());
        assert!(NodalField::new(&a, vec![1.0; 2]).is_err());
    }
}

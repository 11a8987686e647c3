//! Area-equilibrating refinement and coarsening by newest-vertex bisection.
//!
//! One adaptation event marks triangles against a target area, bisects the
//! marked ones once (plus whatever the conformity closure needs), moves the
//! boundary vertices to a curvature-consistent position, and finally merges
//! marked sibling pairs back into their parents.

use std::collections::{HashMap, HashSet};

use crate::assembly::assemble_boundary_curve_operators;
use crate::deturck::SimState;
use crate::error::{Error, Result};
use crate::linalg::{cg_solve, CsrBuilder, SolverOptions};
use crate::mesh::{NodalField, Point, SurfaceMesh};
use crate::reference::ReferenceMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig {
    pub enabled: bool,
    /// Adaptation period in time units.
    pub t_adapt: f64,
    /// Triangle count of the initial mesh; the target area is `|Γ| / n0`.
    pub n0: usize,
}

impl AdaptConfig {
    pub fn new(t_adapt: f64, initial: &SurfaceMesh) -> Self {
        AdaptConfig {
            enabled: true,
            t_adapt,
            n0: initial.triangle_count(),
        }
    }

    pub fn disabled() -> Self {
        AdaptConfig {
            enabled: false,
            t_adapt: f64::INFINITY,
            n0: 1,
        }
    }

    pub fn target_area(&self, mesh: &SurfaceMesh) -> f64 {
        mesh.total_area() / self.n0 as f64
    }

    /// True when a multiple of `t_adapt` lies in `(t_old, t_new]`.
    pub fn fires(&self, t_old: f64, t_new: f64) -> bool {
        self.enabled && self.t_adapt.is_finite() && (t_new / self.t_adapt).floor() > (t_old / self.t_adapt).floor()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mark {
    Refine,
    Coarsen,
    Keep,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkSet {
    pub marks: Vec<Mark>,
}

impl MarkSet {
    pub fn count(&self, mark: Mark) -> usize {
        self.marks.iter().filter(|&&m| m == mark).count()
    }

    pub fn is_noop(&self) -> bool {
        self.marks.iter().all(|&m| m == Mark::Keep)
    }
}

/// Refine above `2 A_target`, coarsen below `A_target / 2`.
pub fn mark(mesh: &SurfaceMesh, target_area: f64) -> MarkSet {
    let marks = (0..mesh.triangle_count())
        .map(|t| {
            let a = mesh.triangle_area(t);
            if a > 2.0 * target_area {
                Mark::Refine
            } else if a < 0.5 * target_area {
                Mark::Coarsen
            } else {
                Mark::Keep
            }
        })
        .collect();
    MarkSet { marks }
}

/// Origin of a vertex after adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Copy(usize),
    /// Midpoint of two earlier vertices in the intermediate numbering.
    Midpoint(usize, usize),
}

/// Describes how nodal values move from the old mesh to the adapted one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexTransfer {
    sources: Vec<Source>,
    keep: Vec<usize>,
    old_count: usize,
}

impl VertexTransfer {
    fn identity(n: usize) -> Self {
        VertexTransfer {
            sources: (0..n).map(Source::Copy).collect(),
            keep: (0..n).collect(),
            old_count: n,
        }
    }

    /// Maps old values through midpoint insertion and vertex deletion.
    pub fn apply<T: Clone>(&self, old: &[T], mut mix: impl FnMut(&T, &T) -> T) -> Result<Vec<T>> {
        if old.len() != self.old_count {
            return Err(Error::DimensionMismatch {
                expected: self.old_count,
                got: old.len(),
            });
        }
        let mut all: Vec<T> = Vec::with_capacity(self.sources.len());
        for s in &self.sources {
            let v = match *s {
                Source::Copy(i) => old[i].clone(),
                Source::Midpoint(a, b) => mix(&all[a], &all[b]),
            };
            all.push(v);
        }
        Ok(self.keep.iter().map(|&i| all[i].clone()).collect())
    }

    /// Linear interpolation of a scalar field.
    pub fn apply_scalar(&self, old: &[f64]) -> Result<Vec<f64>> {
        self.apply(old, |a, b| 0.5 * (a + b))
    }

    pub fn is_identity(&self) -> bool {
        self.sources.len() == self.old_count && self.keep.len() == self.old_count
    }

    /// Number of vertices of the adapted mesh.
    pub fn new_count(&self) -> usize {
        self.keep.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdaptReport {
    pub refined: usize,
    pub coarsened: usize,
    pub vertices_added: usize,
    pub vertices_removed: usize,
    pub sigma_before: f64,
    pub sigma_after: f64,
}

/// Inward discrete curvature vector of the boundary polygons,
/// `κ = −M⁻¹ K id` with the lumped curve mass `M` and curve stiffness `K`.
/// Zero at interior vertices.
pub fn boundary_curvature_vector(mesh: &SurfaceMesh) -> NodalField<Point> {
    let ops = assemble_boundary_curve_operators(mesh);
    let mut kappa = vec![Point::zeros(); mesh.vertex_count()];
    for c in 0..3 {
        let x: Vec<f64> = mesh.vertices().iter().map(|p| p[c]).collect();
        let kx = ops.stiffness.matvec(&x).expect("square operator");
        for (v, k) in kappa.iter_mut().enumerate() {
            if ops.mass[v] > 0.0 {
                k[c] = -kx[v] / ops.mass[v];
            }
        }
    }
    NodalField::new(mesh, kappa).expect("one value per vertex")
}

/// Repositions the boundary vertices of the loops in `loops`: per loop and
/// component solve `∫∇u·∇φ = −∫I_h(κ φ)` with the mean of `u` matched to the
/// mean of the current positions.
pub fn geometric_consistency_update(
    mesh: &mut SurfaceMesh,
    kappa: &NodalField<Point>,
    loops: &[usize],
    solver: &SolverOptions,
) -> Result<()> {
    kappa.check(mesh)?;
    let mut pts = mesh.vertices().to_vec();
    for &l in loops {
        let cycle = mesh.boundary_loops()[l].clone();
        let n = cycle.len();
        let len: Vec<f64> = (0..n)
            .map(|k| (mesh.vertex(cycle[(k + 1) % n]) - mesh.vertex(cycle[k])).norm())
            .collect();
        let mass: Vec<f64> = (0..n).map(|k| 0.5 * (len[k] + len[(k + n - 1) % n])).collect();
        let total: f64 = mass.iter().sum();
        let mut b = CsrBuilder::new(n);
        for k in 0..n {
            let j = (k + 1) % n;
            let s = 1.0 / len[k];
            b.add(k, k, s);
            b.add(j, j, s);
            b.add(k, j, -s);
            b.add(j, k, -s);
        }
        let stiff = b.finish();
        for c in 0..3 {
            let mut rhs: Vec<f64> = (0..n).map(|k| -mass[k] * kappa[cycle[k]][c]).collect();
            let mean = rhs.iter().sum::<f64>() / n as f64;
            rhs.iter_mut().for_each(|r| *r -= mean);
            let x0: Vec<f64> = cycle.iter().map(|&v| mesh.vertex(v)[c]).collect();
            let (mut u, report) = cg_solve(&stiff, &rhs, Some(&x0), solver);
            report.into_result("boundary curve")?;
            let target: f64 = x0.iter().zip(&mass).map(|(x, m)| x * m).sum::<f64>() / total;
            let got: f64 = u.iter().zip(&mass).map(|(x, m)| x * m).sum::<f64>() / total;
            u.iter_mut().for_each(|x| *x += target - got);
            for (k, &v) in cycle.iter().enumerate() {
                pts[v][c] = u[k];
            }
        }
    }
    mesh.set_vertices(pts)
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Working copy of the leaf triangulation during one adaptation event.
struct Work {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    leaves: Vec<usize>,
    forest: crate::mesh::BisectionForest,
    sources: Vec<Source>,
}

impl Work {
    fn from_mesh(mesh: SurfaceMesh) -> Self {
        let n = mesh.vertex_count();
        let (vertices, triangles, forest, leaves) = mesh.into_parts();
        Work {
            vertices,
            triangles,
            leaves,
            forest,
            sources: (0..n).map(Source::Copy).collect(),
        }
    }

    /// Bisects every triangle in `marked` (leaf node ids) once, then closes
    /// hanging nodes. Returns the number of bisections.
    fn refine(&mut self, marked: &HashSet<usize>) -> Result<usize> {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut count = 0;
        let mut first = true;
        loop {
            let mut next_tris = Vec::with_capacity(self.triangles.len());
            let mut next_leaves = Vec::with_capacity(self.leaves.len());
            let mut changed = false;
            for (tri, node) in self.triangles.clone().into_iter().zip(self.leaves.clone()) {
                let hanging = (0..3).any(|k| midpoints.contains_key(&edge_key(tri[k], tri[(k + 1) % 3])));
                if !(hanging || (first && marked.contains(&node))) {
                    next_tris.push(tri);
                    next_leaves.push(node);
                    continue;
                }
                let [a, b, _] = tri;
                let m = *midpoints.entry(edge_key(a, b)).or_insert_with(|| {
                    self.vertices.push((self.vertices[a] + self.vertices[b]) * 0.5);
                    self.sources.push(Source::Midpoint(a, b));
                    self.vertices.len() - 1
                });
                let [l, r] = self.forest.bisect(node, m)?;
                next_tris.push(self.forest.node(l)?.vertices);
                next_leaves.push(l);
                next_tris.push(self.forest.node(r)?.vertices);
                next_leaves.push(r);
                count += 1;
                changed = true;
            }
            self.triangles = next_tris;
            self.leaves = next_leaves;
            first = false;
            if !changed {
                break;
            }
            if count > 64 * (self.triangles.len() + 1) {
                return Err(Error::Forest("refinement closure did not terminate".into()));
            }
        }
        Ok(count)
    }

    fn into_mesh(self) -> Result<(SurfaceMesh, Vec<Source>)> {
        let mesh = SurfaceMesh::from_parts(self.vertices, self.triangles, self.forest, self.leaves)?;
        Ok((mesh, self.sources))
    }
}

/// Merges sibling pairs whose midpoint vertex is surrounded only by leaves
/// in `candidates`; returns the coarsened mesh, the kept vertex indices and
/// the number of merges.
fn coarsen(mesh: SurfaceMesh, candidates: &HashSet<usize>) -> Result<(SurfaceMesh, Vec<usize>, usize)> {
    let n = mesh.vertex_count();
    let mut remove: Vec<bool> = vec![false; n];
    let mut merge_parents: Vec<usize> = Vec::new();
    for v in 0..n {
        let tris = mesh.vertex_triangles(v);
        if tris.is_empty() {
            continue;
        }
        let mut parents = Vec::new();
        let mut ok = true;
        for &t in tris {
            let node_id = mesh.leaf_nodes()[t];
            let node = mesh.forest().node(node_id)?;
            let Some(parent) = node.parent else {
                ok = false;
                break;
            };
            let pnode = mesh.forest().node(parent)?;
            if pnode.midpoint != Some(v) || !candidates.contains(&node_id) {
                ok = false;
                break;
            }
            if !parents.contains(&parent) {
                parents.push(parent);
            }
        }
        if !ok {
            continue;
        }
        // every child of each parent must be present and a leaf
        let complete = parents.iter().all(|&p| {
            mesh.forest()
                .node(p)
                .ok()
                .and_then(|n| n.children)
                .is_some_and(|ch| ch.iter().all(|c| mesh.forest().node(*c).is_ok_and(|n| n.is_leaf())))
        });
        let expected = if mesh.is_boundary_vertex(v) { 2 } else { 4 };
        if complete && tris.len() == expected && 2 * parents.len() == expected {
            remove[v] = true;
            merge_parents.extend(parents);
        }
    }
    if merge_parents.is_empty() {
        return Ok((mesh, (0..n).collect(), 0));
    }
    let merged: HashSet<usize> = merge_parents.iter().copied().collect();
    let (vertices, triangles, mut forest, leaves) = mesh.into_parts();
    let mut new_tris = Vec::with_capacity(triangles.len());
    let mut new_leaves = Vec::with_capacity(leaves.len());
    let mut done: HashSet<usize> = HashSet::new();
    let parents: Vec<Option<usize>> = leaves
        .iter()
        .map(|&node| forest.node(node).map(|n| n.parent))
        .collect::<Result<_>>()?;
    for ((tri, node), parent) in triangles.into_iter().zip(leaves).zip(parents) {
        match parent {
            Some(p) if merged.contains(&p) => {
                if done.insert(p) {
                    forest.merge(p)?;
                    new_tris.push(forest.node(p)?.vertices);
                    new_leaves.push(p);
                }
            }
            _ => {
                new_tris.push(tri);
                new_leaves.push(node);
            }
        }
    }
    let mut new_index = vec![None; n];
    let mut keep = Vec::with_capacity(n);
    for v in 0..n {
        if !remove[v] {
            new_index[v] = Some(keep.len());
            keep.push(v);
        }
    }
    forest.renumber_vertices(&new_index)?;
    let new_tris = new_tris
        .into_iter()
        .map(|t| t.map(|v| new_index[v].expect("surviving vertex")))
        .collect();
    let new_vertices = keep.iter().map(|&v| vertices[v]).collect();
    let mesh = SurfaceMesh::from_parts(new_vertices, new_tris, forest, new_leaves)?;
    Ok((mesh, keep, merged.len()))
}

/// One refinement-and-coarsening pass driven by `marks`. Boundary vertices
/// of loops that received new vertices are moved by
/// [`geometric_consistency_update`]; new reference values are midpoints
/// projected onto the reference manifold.
pub fn refine_and_coarsen(
    mesh: &SurfaceMesh,
    ymap: &ReferenceMap,
    marks: &MarkSet,
    solver: &SolverOptions,
) -> Result<(SurfaceMesh, ReferenceMap, VertexTransfer, AdaptReport)> {
    ymap.check(mesh)?;
    if marks.marks.len() != mesh.triangle_count() {
        return Err(Error::DimensionMismatch {
            expected: mesh.triangle_count(),
            got: marks.marks.len(),
        });
    }
    let old_count = mesh.vertex_count();
    let sigma_before = mesh.sigma_max()?;
    if marks.is_noop() {
        let report = AdaptReport {
            sigma_before,
            sigma_after: sigma_before,
            ..AdaptReport::default()
        };
        return Ok((mesh.clone(), ymap.clone(), VertexTransfer::identity(old_count), report));
    }
    let kappa_old = boundary_curvature_vector(mesh);
    let leaf = |t: usize| mesh.leaf_nodes()[t];
    let refine_set: HashSet<usize> = (0..mesh.triangle_count())
        .filter(|&t| marks.marks[t] == Mark::Refine)
        .map(leaf)
        .collect();
    let coarsen_set: HashSet<usize> = (0..mesh.triangle_count())
        .filter(|&t| marks.marks[t] == Mark::Coarsen)
        .map(leaf)
        .collect();

    let mut work = Work::from_mesh(mesh.clone());
    let refined = work.refine(&refine_set)?;
    let (mut fine, sources) = work.into_mesh()?;
    let partial = VertexTransfer {
        keep: (0..sources.len()).collect(),
        sources: sources.clone(),
        old_count,
    };

    if refined > 0 {
        let kappa = partial.apply(kappa_old.values(), |a, b| (a + b) * 0.5)?;
        let kappa = NodalField::new(&fine, kappa)?;
        let affected: Vec<usize> = (0..fine.boundary_loops().len())
            .filter(|&l| fine.boundary_loops()[l].iter().any(|&v| v >= old_count))
            .collect();
        geometric_consistency_update(&mut fine, &kappa, &affected, solver)?;
    }

    let (coarse, keep, coarsened) = coarsen(fine, &coarsen_set)?;
    let transfer = VertexTransfer {
        sources,
        keep,
        old_count,
    };
    let manifold = ymap.manifold;
    let mut failure = None;
    let y = transfer.apply(ymap.points(), |a, b| {
        let mid = (a + b) * 0.5;
        manifold.project(&mid).unwrap_or_else(|e| {
            failure.get_or_insert(e);
            mid
        })
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let ymap = ReferenceMap::new(manifold, &coarse, y)?;
    let report = AdaptReport {
        refined,
        coarsened,
        vertices_added: transfer.sources.len() - old_count,
        vertices_removed: transfer.sources.len() - transfer.keep.len(),
        sigma_before,
        sigma_after: coarse.sigma_max()?,
    };
    Ok((coarse, ymap, transfer, report))
}

/// Marks against the current target area and applies
/// [`refine_and_coarsen`] to the state.
pub fn adapt_cycle(state: &mut SimState, config: &AdaptConfig) -> Result<(VertexTransfer, AdaptReport)> {
    let target = config.target_area(&state.mesh);
    let marks = mark(&state.mesh, target);
    let (mesh, ymap, transfer, report) = refine_and_coarsen(&state.mesh, &state.ymap, &marks, &state.config.solver)?;
    state.mesh = mesh;
    state.ymap = ymap;
    Ok((transfer, report))
}

/// True if every edge is shared by two triangles or is a boundary edge, and
/// no leaf edge was bisected on its other side (no hanging nodes).
pub fn is_conforming(mesh: &SurfaceMesh) -> bool {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in mesh.triangles() {
        for k in 0..3 {
            *count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
        }
    }
    let bisected: HashSet<(usize, usize)> = mesh
        .forest()
        .iter()
        .filter(|(_, n)| n.midpoint.is_some())
        .map(|(_, n)| edge_key(n.vertices[0], n.vertices[1]))
        .collect();
    count.iter().all(|(e, &c)| (c == 1 || c == 2) && !bisected.contains(e))
        && count.values().filter(|&&c| c == 1).count() == mesh.boundary_edges().len()
}

//! Global P1 matrices on a surface mesh and the per-triangle metric map Ĥ.
//!
//! All element integrals are exact for affine triangles: `∫φ_i = |S|/3`,
//! `∫φ_iφ_j = |S|(1+δ_ij)/12` and `∫φ_i = L/2` on a boundary edge.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::linalg::{BlockBuilder, BlockSparseMatrix, CsrBuilder, CsrMatrix};
use crate::mesh::{NodalField, Point, SurfaceMesh};
use crate::reference::ReferenceMap;

/// Condition number above which Ĥ is treated as singular.
pub const HHAT_CONDITION_LIMIT: f64 = 1e12;

/// `Ĥ = GᵀG + I − P` on one triangle, where the rows of `G` are the
/// tangential gradients of the three components of the reference map.
#[derive(Debug, Clone, PartialEq)]
pub struct HHat {
    pub triangle: usize,
    pub matrix: Matrix3<f64>,
    pub inverse: Matrix3<f64>,
    pub gradient: Matrix3<f64>,
}

impl HHat {
    /// `Ĥ⁻¹ Gᵀ`: column σ is `Ĥ⁻¹ ∇_Γ ŷ_σ`.
    pub fn transport(&self) -> Matrix3<f64> {
        self.inverse * self.gradient.transpose()
    }
}

pub fn compute_hhat(mesh: &SurfaceMesh, ymap: &ReferenceMap, t: usize) -> Result<HHat> {
    ymap.check(mesh)?;
    let grads = mesh.basis_gradients(t)?;
    let tri = mesh.triangle(t);
    let y = ymap.points();
    let mut gradient = Matrix3::zeros();
    for (k, &v) in tri.iter().enumerate() {
        // row σ accumulates y_σ(v) ∇φ_k
        gradient += y[v] * grads[k].transpose();
    }
    let p = mesh.tangential_projection(t)?;
    let matrix = gradient.transpose() * gradient + Matrix3::identity() - p;
    let matrix = (matrix + matrix.transpose()) * 0.5;
    let eig = SymmetricEigen::new(matrix).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > HHAT_CONDITION_LIMIT {
        return Err(Error::SingularParametrization { triangle: t, condition });
    }
    let inverse = matrix
        .try_inverse()
        .ok_or(Error::SingularParametrization { triangle: t, condition })?;
    Ok(HHat {
        triangle: t,
        matrix,
        inverse,
        gradient,
    })
}

pub fn compute_all_hhat(mesh: &SurfaceMesh, ymap: &ReferenceMap) -> Result<Vec<HHat>> {
    (0..mesh.triangle_count())
        .map(|t| compute_hhat(mesh, ymap, t))
        .collect()
}

/// Scalar lumped weights: `Σ|S|/3` at interior vertices and half the length
/// of the two incident boundary edges at boundary vertices.
pub fn lumped_weights(mesh: &SurfaceMesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.vertex_count()];
    for t in 0..mesh.triangle_count() {
        let third = mesh.triangle_area(t) / 3.0;
        for v in mesh.triangle(t) {
            if !mesh.is_boundary_vertex(v) {
                w[v] += third;
            }
        }
    }
    for &[a, b] in mesh.boundary_edges() {
        let half = (mesh.vertex(b) - mesh.vertex(a)).norm() / 2.0;
        w[a] += half;
        w[b] += half;
    }
    w
}

/// Lumped surface weights `Σ|S|/3` for every vertex, ignoring the boundary rule.
pub fn surface_lumped_weights(mesh: &SurfaceMesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.vertex_count()];
    for t in 0..mesh.triangle_count() {
        let third = mesh.triangle_area(t) / 3.0;
        for v in mesh.triangle(t) {
            w[v] += third;
        }
    }
    w
}

pub fn assemble_mass_lumped(mesh: &SurfaceMesh) -> BlockSparseMatrix {
    let mut b = BlockBuilder::new(mesh.vertex_count());
    for (v, w) in lumped_weights(mesh).into_iter().enumerate() {
        b.add_scalar(v, v, w);
    }
    b.finish()
}

/// Consistent scalar mass `∫φ_iφ_j`.
pub fn scalar_mass_consistent(mesh: &SurfaceMesh) -> CsrMatrix {
    let mut b = CsrBuilder::new(mesh.vertex_count());
    for t in 0..mesh.triangle_count() {
        let area = mesh.triangle_area(t);
        let tri = mesh.triangle(t);
        for &i in &tri {
            for &j in &tri {
                b.add(i, j, if i == j { area / 6.0 } else { area / 12.0 });
            }
        }
    }
    b.finish()
}

/// Consistent vector mass where the first-component coupling of every
/// boundary vertex is replaced by an identity row and column.
pub fn assemble_mass_consistent_constrained(mesh: &SurfaceMesh) -> BlockSparseMatrix {
    let n = mesh.vertex_count();
    let mut b = BlockBuilder::new(n);
    for t in 0..mesh.triangle_count() {
        let area = mesh.triangle_area(t);
        let tri = mesh.triangle(t);
        for &i in &tri {
            for &j in &tri {
                let m = if i == j { area / 6.0 } else { area / 12.0 };
                let first = if mesh.is_boundary_vertex(i) || mesh.is_boundary_vertex(j) {
                    0.0
                } else {
                    m
                };
                b.add(i, j, Matrix3::from_diagonal(&Vector3::new(first, m, m)));
            }
        }
    }
    for v in 0..n {
        if mesh.is_boundary_vertex(v) {
            let mut e = Matrix3::zeros();
            e[(0, 0)] = 1.0;
            b.add(v, v, e);
        }
    }
    b.finish()
}

/// Scalar stiffness `∫∇_Γφ_i·∇_Γφ_j`.
pub fn scalar_stiffness(mesh: &SurfaceMesh) -> Result<CsrMatrix> {
    let mut b = CsrBuilder::new(mesh.vertex_count());
    for t in 0..mesh.triangle_count() {
        let grads = mesh.basis_gradients(t)?;
        let area = mesh.triangle_area(t);
        let tri = mesh.triangle(t);
        for (a, &i) in tri.iter().enumerate() {
            for (c, &j) in tri.iter().enumerate() {
                b.add(i, j, area * grads[a].dot(&grads[c]));
            }
        }
    }
    Ok(b.finish())
}

/// Vector stiffness with `δ_κσ` blocks.
pub fn assemble_stiffness(mesh: &SurfaceMesh) -> Result<BlockSparseMatrix> {
    let s = scalar_stiffness(mesh)?;
    let mut b = BlockBuilder::new(mesh.vertex_count());
    for i in 0..s.n() {
        for (j, v) in s.row(i) {
            b.add_scalar(i, j, v);
        }
    }
    Ok(b.finish())
}

/// Per-triangle weight of vertex `i` in the DeTurck term: `|S|/3` for an
/// interior vertex and half the length of the triangle's boundary edges at
/// `i` for a boundary vertex.
fn deturck_weights(mesh: &SurfaceMesh, t: usize) -> [f64; 3] {
    let tri = mesh.triangle(t);
    let third = mesh.triangle_area(t) / 3.0;
    let mut w = [0.0; 3];
    for (k, wk) in w.iter_mut().enumerate() {
        if !mesh.is_boundary_vertex(tri[k]) {
            *wk = third;
        }
    }
    for k in 0..3 {
        if mesh.neighbor(t, k).is_none() {
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            let half = (mesh.vertex(tri[b]) - mesh.vertex(tri[a])).norm() / 2.0;
            w[a] += half;
            w[b] += half;
        }
    }
    w
}

/// Boundary tangent projections `T_h(p)` for all boundary vertices.
fn tangent_projections(mesh: &SurfaceMesh) -> Result<Vec<Option<Matrix3<f64>>>> {
    (0..mesh.vertex_count())
        .map(|v| {
            if mesh.is_boundary_vertex(v) {
                mesh.boundary_tangent_projection(v).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect()
}

/// `D Z̃` evaluated without forming `D`.
pub fn apply_deturck(mesh: &SurfaceMesh, hhats: &[HHat], zeta_tilde: &NodalField<Point>) -> Result<Vec<Point>> {
    zeta_tilde.check(mesh)?;
    let d = deturck_blocks(mesh, hhats)?;
    Ok(d.iter().zip(zeta_tilde.values()).map(|(blk, z)| blk * z).collect())
}

/// The vertex-diagonal DeTurck matrix `D` in block form.
pub fn assemble_deturck_d(mesh: &SurfaceMesh, hhats: &[HHat]) -> Result<BlockSparseMatrix> {
    let blocks = deturck_blocks(mesh, hhats)?;
    let mut b = BlockBuilder::new(mesh.vertex_count());
    for (v, blk) in blocks.into_iter().enumerate() {
        b.add(v, v, blk);
    }
    Ok(b.finish())
}

fn deturck_blocks(mesh: &SurfaceMesh, hhats: &[HHat]) -> Result<Vec<Matrix3<f64>>> {
    if hhats.len() != mesh.triangle_count() {
        return Err(Error::DimensionMismatch {
            expected: mesh.triangle_count(),
            got: hhats.len(),
        });
    }
    let mut blocks = vec![Matrix3::zeros(); mesh.vertex_count()];
    for (t, h) in hhats.iter().enumerate() {
        let w = h.transport();
        let weights = deturck_weights(mesh, t);
        for (k, v) in mesh.triangle(t).into_iter().enumerate() {
            blocks[v] += w * weights[k];
        }
    }
    for (v, th) in tangent_projections(mesh)?.into_iter().enumerate() {
        if let Some(th) = th {
            blocks[v] = th * blocks[v];
        }
    }
    Ok(blocks)
}

/// One-dimensional P1 operators on the boundary polygons, indexed by mesh
/// vertex. Interior vertices have zero mass and empty stiffness rows.
#[derive(Debug, Clone)]
pub struct CurveOperators {
    pub mass: Vec<f64>,
    pub stiffness: CsrMatrix,
}

pub fn assemble_boundary_curve_operators(mesh: &SurfaceMesh) -> CurveOperators {
    let n = mesh.vertex_count();
    let mut mass = vec![0.0; n];
    let mut b = CsrBuilder::new(n);
    for &[a, c] in mesh.boundary_edges() {
        let len = (mesh.vertex(c) - mesh.vertex(a)).norm();
        mass[a] += len / 2.0;
        mass[c] += len / 2.0;
        let k = 1.0 / len;
        b.add(a, a, k);
        b.add(c, c, k);
        b.add(a, c, -k);
        b.add(c, a, -k);
    }
    CurveOperators {
        mass,
        stiffness: b.finish(),
    }
}

/// The matrices needed by one DeTurck step, stamped to the mesh.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub lumped: BlockSparseMatrix,
    pub constrained: BlockSparseMatrix,
    pub stiffness: BlockSparseMatrix,
    pub stamp: u64,
}

impl AssembledSystem {
    pub fn new(mesh: &SurfaceMesh) -> Result<Self> {
        Ok(AssembledSystem {
            lumped: assemble_mass_lumped(mesh),
            constrained: assemble_mass_consistent_constrained(mesh),
            stiffness: assemble_stiffness(mesh)?,
            stamp: mesh.generation(),
        })
    }
}

pub(crate) fn flatten(points: &[Point]) -> Vec<f64> {
    points.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

pub(crate) fn unflatten(flat: &[f64]) -> Vec<Point> {
    flat.chunks_exact(3).map(|c| Point::new(c[0], c[1], c[2])).collect()
}

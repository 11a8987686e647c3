//! Discrete harmonic extension of boundary data into the interior.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::assembly::scalar_stiffness;
use crate::error::{Error, Result};
use crate::linalg::{cg_solve, CsrMatrix, SolverOptions};
use crate::mesh::{NodalField, SurfaceMesh};

/// Solves `S u = 0` on interior rows with `u` prescribed at boundary
/// vertices; entries of `values` at interior vertices serve as the initial
/// guess.
pub fn harmonic_extension_scalar(
    mesh: &SurfaceMesh,
    stiffness: &CsrMatrix,
    values: &[f64],
    solver: &SolverOptions,
) -> Result<Vec<f64>> {
    if values.len() != mesh.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: mesh.vertex_count(),
            got: values.len(),
        });
    }
    let fixed = mesh.boundary_vertex_mask();
    let zero = vec![0.0; values.len()];
    let (a, b) = stiffness.with_dirichlet(&fixed, values, &zero);
    let (x, report) = cg_solve(&a, &b, Some(values), solver);
    report.into_result("harmonic extension")?;
    Ok(x)
}

/// Componentwise harmonic extension of vector boundary data.
pub fn harmonic_extension(
    mesh: &SurfaceMesh,
    boundary: &[Vector3<f64>],
    solver: &SolverOptions,
) -> Result<NodalField<Vector3<f64>>> {
    let s = scalar_stiffness(mesh)?;
    let mut out = boundary.to_vec();
    for c in 0..3 {
        let values: Vec<f64> = boundary.iter().map(|v| v[c]).collect();
        let x = harmonic_extension_scalar(mesh, &s, &values, solver)?;
        for (o, xi) in out.iter_mut().zip(x) {
            o[c] = xi;
        }
    }
    NodalField::new(mesh, out)
}

/// Vector area `½ Σ pᵢ × pᵢ₊₁` of every boundary loop. For a positively
/// oriented planar mesh the outer loop has positive `z` component.
pub fn loop_areas(mesh: &SurfaceMesh) -> Vec<Vector3<f64>> {
    mesh.boundary_loops()
        .iter()
        .map(|lp| {
            let mut a = Vector3::zeros();
            for (k, &v) in lp.iter().enumerate() {
                let w = lp[(k + 1) % lp.len()];
                a += mesh.vertex(v).cross(&mesh.vertex(w));
            }
            a * 0.5
        })
        .collect()
}

/// Index of the loop enclosing the smallest area.
pub fn inner_loop(mesh: &SurfaceMesh) -> Option<usize> {
    let areas = loop_areas(mesh);
    (0..areas.len()).min_by(|&a, &b| areas[a].norm().total_cmp(&areas[b].norm()))
}

/// Boundary velocity of the moving hole: `4(−sin 2πt, cos 2πt, 0)`.
pub fn rotating_hole_velocity(t: f64) -> Vector3<f64> {
    let (s, c) = (2.0 * PI * t).sin_cos();
    Vector3::new(-4.0 * s, 4.0 * c, 0.0)
}

/// Harmonic velocity on a two-loop domain: `inner` on the loop enclosing
/// less area, `outer` on every other loop.
pub fn harmonic_velocity_extension(
    mesh: &SurfaceMesh,
    inner: Vector3<f64>,
    outer: Vector3<f64>,
    solver: &SolverOptions,
) -> Result<NodalField<Vector3<f64>>> {
    let hole = inner_loop(mesh).ok_or_else(|| Error::Config("mesh has no boundary".into()))?;
    let mut data = vec![Vector3::zeros(); mesh.vertex_count()];
    for (l, lp) in mesh.boundary_loops().iter().enumerate() {
        for &v in lp {
            data[v] = if l == hole { inner } else { outer };
        }
    }
    harmonic_extension(mesh, &data, solver)
}

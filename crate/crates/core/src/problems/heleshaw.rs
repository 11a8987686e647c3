//! Hele-Shaw flow with a point sink, split as `p = p̃ + G_q` so that only
//! the regular part `p̃` is discretized.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::adapt::boundary_curvature_vector;
use crate::assembly::{assemble_boundary_curve_operators, scalar_stiffness};
use crate::error::{Error, Result};
use crate::linalg::SolverOptions;
use crate::mesh::{NodalField, Point, SurfaceMesh};
use crate::problems::harmonic::{harmonic_extension, harmonic_extension_scalar};

/// Vertices closer than this to the sink are rejected.
pub const SINK_GUARD: f64 = 1e-10;

/// Coefficient of the kinematic law `v = −(1/12) ∂_ν p ν`.
pub const MOBILITY: f64 = 1.0 / 12.0;

/// `G_q(x) = (1/2π) log|x − q|`.
pub fn green(x: &Point, q: &Point) -> f64 {
    (x - q).norm().ln() / (2.0 * PI)
}

pub fn green_gradient(x: &Point, q: &Point) -> Vector3<f64> {
    let d = x - q;
    d / (2.0 * PI * d.norm_squared())
}

#[derive(Debug, Clone)]
pub struct HeleShawState {
    pub sink: Point,
    pub sigma: f64,
    pub pressure: NodalField<f64>,
    pub velocity: NodalField<Vector3<f64>>,
}

impl HeleShawState {
    /// Solves for pressure and velocity on the current mesh.
    pub fn solve(mesh: &SurfaceMesh, sink: Point, sigma: f64, solver: &SolverOptions) -> Result<Self> {
        let pressure = heleshaw_pressure(mesh, &sink, sigma, solver)?;
        let velocity = heleshaw_velocity(mesh, &sink, &pressure, solver)?;
        Ok(HeleShawState {
            sink,
            sigma,
            pressure,
            velocity,
        })
    }
}

fn check_sink(mesh: &SurfaceMesh, sink: &Point) -> Result<()> {
    match mesh.vertices().iter().position(|p| (p - sink).norm() < SINK_GUARD) {
        Some(vertex) => Err(Error::VertexAtSink { vertex }),
        None => Ok(()),
    }
}

/// Regular pressure part `p̃`: on the boundary the lumped curve system gives
/// `p̃_j = σ (K id)_j·ν_j / m_j − G_q(x_j)`, inside `p̃` is discrete harmonic.
pub fn heleshaw_pressure(
    mesh: &SurfaceMesh,
    sink: &Point,
    sigma: f64,
    solver: &SolverOptions,
) -> Result<NodalField<f64>> {
    check_sink(mesh, sink)?;
    let kappa = boundary_curvature_vector(mesh);
    let mut values = vec![0.0; mesh.vertex_count()];
    for lp in mesh.boundary_loops() {
        for &v in lp {
            let nu = mesh.vertex_conormal(v)?;
            // κ points inward, so −κ·ν is the curvature, positive on convex parts
            values[v] = -sigma * kappa[v].dot(&nu) - green(&mesh.vertex(v), sink);
        }
    }
    let s = scalar_stiffness(mesh)?;
    let p = harmonic_extension_scalar(mesh, &s, &values, solver)?;
    NodalField::new(mesh, p)
}

/// Boundary velocity `v_j = −(1/12)(∂_ν p̃ + ∇G_q·ν_j) ν_j`, with `∂_ν p̃`
/// the lumped average over the two boundary edges at `j` of the adjacent
/// triangle's constant gradient; harmonic extension inside.
pub fn heleshaw_velocity(
    mesh: &SurfaceMesh,
    sink: &Point,
    pressure: &NodalField<f64>,
    solver: &SolverOptions,
) -> Result<NodalField<Vector3<f64>>> {
    check_sink(mesh, sink)?;
    pressure.check(mesh)?;
    let ops = assemble_boundary_curve_operators(mesh);
    let n = mesh.vertex_count();
    let mut nu = vec![Vector3::zeros(); n];
    for lp in mesh.boundary_loops() {
        for &v in lp {
            nu[v] = mesh.vertex_conormal(v)?;
        }
    }
    let mut flux = vec![0.0; n];
    for (e, &[a, b]) in mesh.boundary_edges().iter().enumerate() {
        let t = mesh.boundary_edge_triangle(e);
        let tri = mesh.triangle(t);
        let grad = mesh.tangential_gradient(t, tri.map(|v| pressure[v]))?;
        let half = (mesh.vertex(b) - mesh.vertex(a)).norm() / 2.0;
        flux[a] += half * grad.dot(&nu[a]);
        flux[b] += half * grad.dot(&nu[b]);
    }
    let mut data = vec![Vector3::zeros(); n];
    for lp in mesh.boundary_loops() {
        for &v in lp {
            let dn = flux[v] / ops.mass[v] + green_gradient(&mesh.vertex(v), sink).dot(&nu[v]);
            data[v] = nu[v] * (-MOBILITY * dn);
        }
    }
    harmonic_extension(mesh, &data, solver)
}

/// `Σ_j m_j v_j·ν_j` over boundary vertices with the lumped curve mass; the
/// discrete rate of change of the enclosed area.
pub fn boundary_flux(mesh: &SurfaceMesh, velocity: &NodalField<Vector3<f64>>) -> Result<f64> {
    velocity.check(mesh)?;
    let ops = assemble_boundary_curve_operators(mesh);
    let mut sum = 0.0;
    for lp in mesh.boundary_loops() {
        for &v in lp {
            sum += ops.mass[v] * velocity[v].dot(&mesh.vertex_conormal(v)?);
        }
    }
    Ok(sum)
}

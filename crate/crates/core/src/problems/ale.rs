//! Advection-diffusion on a moving surface, discretized in ALE form on the
//! reparametrized mesh.
//!
//! One step solves
//! `(1/τ) m^{m+1} p + D S p + A p = (1/τ) m^m p^m + m^{m+1} f + g`
//! where `A_ij = Σ_T (|T|/3) v_j·∇φ_i` carries the mesh-minus-material
//! velocity `v = (U^{m+1} − U^m)/τ − I_h v^m` and `g` is lumped boundary
//! flux data. Test functions keep their nodal coefficients from one mesh to
//! the next, so no interpolation between meshes is needed.

use nalgebra::Vector3;

use crate::assembly::{scalar_stiffness, surface_lumped_weights};
use crate::error::{Error, Result};
use crate::linalg::{gmres_solve, CsrBuilder, SolveReport, SolverOptions};
use crate::mesh::{NodalField, Point, SurfaceMesh};
use crate::problems::fields::{ale_exact, ale_exact_gradient, ale_forcing};

/// Right-hand side data of the concentration equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AleSource {
    /// No forcing and zero flux.
    None,
    /// Forcing and Neumann flux matching the manufactured solution
    /// [`ale_exact`].
    Manufactured,
}

impl AleSource {
    fn forcing(&self, x: &Point, t: f64, d: f64) -> f64 {
        match self {
            AleSource::None => 0.0,
            AleSource::Manufactured => ale_forcing(x, t, d),
        }
    }

    /// `D ∇p·ν` on the boundary.
    fn flux(&self, x: &Point, conormal: &Vector3<f64>, t: f64, d: f64) -> f64 {
        match self {
            AleSource::None => 0.0,
            AleSource::Manufactured => d * ale_exact_gradient(x, t).dot(conormal),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AleState {
    pub concentration: NodalField<f64>,
    pub diffusivity: f64,
    pub source: AleSource,
}

impl AleState {
    pub fn new(concentration: NodalField<f64>, diffusivity: f64, source: AleSource) -> Result<Self> {
        if !(diffusivity > 0.0 && diffusivity.is_finite()) {
            return Err(Error::Config(format!(
                "diffusivity must be positive, got {diffusivity}"
            )));
        }
        Ok(AleState {
            concentration,
            diffusivity,
            source,
        })
    }

    /// Interpolant of the manufactured solution at time `t`.
    pub fn manufactured(mesh: &SurfaceMesh, t: f64, diffusivity: f64) -> Result<Self> {
        let p = NodalField::from_fn(mesh, |v| ale_exact(&mesh.vertex(v), t));
        AleState::new(p, diffusivity, AleSource::Manufactured)
    }

    /// Largest nodal deviation from the manufactured solution at time `t`.
    pub fn max_error(&self, mesh: &SurfaceMesh, t: f64) -> Result<f64> {
        self.concentration.check(mesh)?;
        Ok(self
            .concentration
            .values()
            .iter()
            .zip(mesh.vertices())
            .map(|(p, x)| (p - ale_exact(x, t)).abs())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.concentration.values().iter().map(|p| p.abs()).fold(0.0, f64::max)
    }
}

/// Advances the concentration from `old` to `new`, which must share the
/// connectivity. `material` is the nodal medium velocity used for the mesh
/// step, `t_new` the time at the new mesh.
pub fn ale_step(
    state: &mut AleState,
    old: &SurfaceMesh,
    new: &SurfaceMesh,
    material: &[Vector3<f64>],
    tau: f64,
    t_new: f64,
    solver: &SolverOptions,
) -> Result<SolveReport> {
    state.concentration.check(old)?;
    if old.triangles() != new.triangles() {
        return Err(Error::Config(
            "ALE step needs meshes with identical connectivity".into(),
        ));
    }
    let n = new.vertex_count();
    if material.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: material.len(),
        });
    }
    let d = state.diffusivity;
    let m_old = surface_lumped_weights(old);
    let m_new = surface_lumped_weights(new);
    let v_det: Vec<Vector3<f64>> = (0..n)
        .map(|i| (new.vertex(i) - old.vertex(i)) / tau - material[i])
        .collect();

    let s = scalar_stiffness(new)?;
    let mut b = CsrBuilder::new(n);
    for i in 0..n {
        b.add(i, i, m_new[i] / tau);
        for (j, sij) in s.row(i) {
            b.add(i, j, d * sij);
        }
    }
    for t in 0..new.triangle_count() {
        let tri = new.triangle(t);
        let third = new.triangle_area(t) / 3.0;
        let grads = new.basis_gradients(t)?;
        for (a, &i) in tri.iter().enumerate() {
            for &j in &tri {
                b.add(i, j, third * v_det[j].dot(&grads[a]));
            }
        }
    }
    let matrix = b.finish();

    let p_old = state.concentration.values();
    let mut rhs: Vec<f64> = (0..n)
        .map(|i| m_old[i] * p_old[i] / tau + m_new[i] * state.source.forcing(&new.vertex(i), t_new, d))
        .collect();
    for (e, &[a, c]) in new.boundary_edges().iter().enumerate() {
        let nu = new.boundary_edge_conormal(e);
        let half = (new.vertex(c) - new.vertex(a)).norm() / 2.0;
        for v in [a, c] {
            rhs[v] += half * state.source.flux(&new.vertex(v), &nu, t_new, d);
        }
    }

    let opts = SolverOptions {
        jacobi: true,
        ..*solver
    };
    let (p, report) = gmres_solve(&matrix, &rhs, Some(p_old), &opts);
    report.into_result("ale")?;
    state.concentration = NodalField::new(new, p)?;
    Ok(report)
}

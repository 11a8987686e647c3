//! One time step of the reparametrized surface evolution.
//!
//! Each step solves the mass system `M̃ Z = R` for the tension field ζ,
//! projects it onto the reference manifold's tangent spaces, and moves every
//! vertex by `τ v − (τ/α) M⁻¹ D Z̃`. The reference-map coefficients `Y` never
//! change between steps: the lift onto the next surface keeps them by index.

use nalgebra::Vector3;

use crate::assembly::{
    apply_deturck, assemble_mass_consistent_constrained, assemble_stiffness, compute_all_hhat, flatten, lumped_weights,
    scalar_stiffness, surface_lumped_weights, unflatten,
};
use crate::error::{Error, Result};
use crate::linalg::{cg_solve, BlockSparseMatrix, CsrBuilder, SolveReport, SolverOptions};
use crate::mesh::{NodalField, Point, SurfaceMesh};
use crate::reference::ReferenceMap;

/// Relative area threshold for degeneration while stepping.
pub const STEP_DEGENERATE_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeTurckConfig {
    /// Inverse diffusion constant of the reparametrization.
    pub alpha: f64,
    /// `τ = c_tau · h_min²`.
    pub c_tau: f64,
    /// Weight of the optional smoothing term in the ζ system.
    pub epsilon: f64,
    pub solver: SolverOptions,
    /// Runs abort once σ_max exceeds this.
    pub sigma_ceiling: f64,
}

impl Default for DeTurckConfig {
    fn default() -> Self {
        DeTurckConfig {
            alpha: 1.0,
            c_tau: 0.005,
            epsilon: 0.0,
            solver: SolverOptions::default(),
            sigma_ceiling: 1e4,
        }
    }
}

impl DeTurckConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.c_tau > 0.0 && self.c_tau.is_finite()) {
            return Err(Error::Config(format!("c_tau must be positive, got {}", self.c_tau)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if !(self.sigma_ceiling > 0.0) {
            return Err(Error::Config("sigma_ceiling must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub mesh: SurfaceMesh,
    pub ymap: ReferenceMap,
    pub time: f64,
    pub step: usize,
    pub config: DeTurckConfig,
    /// ζ of the previous step, the initial guess for the next solve.
    warm: Option<NodalField<Point>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub tau: f64,
    /// Largest vertex displacement of the step.
    pub max_displacement: f64,
    pub zeta: Option<SolveReport>,
}

impl SimState {
    pub fn new(mesh: SurfaceMesh, ymap: ReferenceMap, time: f64, config: DeTurckConfig) -> Result<Self> {
        config.validate()?;
        ymap.check(&mesh)?;
        Ok(SimState {
            mesh,
            ymap,
            time,
            step: 0,
            config,
            warm: None,
        })
    }

    pub fn time_step(&self) -> f64 {
        time_step(&self.mesh, self.config.c_tau)
    }

    /// Replaces vertex positions after checking that no triangle degenerates.
    fn commit(&mut self, new: Vec<Point>, tau: f64, zeta: Option<SolveReport>) -> Result<StepReport> {
        let max_displacement = self
            .mesh
            .vertices()
            .iter()
            .zip(&new)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let old = self.mesh.vertices().to_vec();
        self.mesh.set_vertices(new)?;
        for t in 0..self.mesh.triangle_count() {
            if let Err(e) = self.mesh.check_triangle(t, STEP_DEGENERATE_RATIO) {
                self.mesh.set_vertices(old)?;
                return Err(e);
            }
        }
        self.time += tau;
        self.step += 1;
        Ok(StepReport {
            tau,
            max_displacement,
            zeta,
        })
    }
}

/// `τ = c_tau · h_min²` for the current mesh.
pub fn time_step(mesh: &SurfaceMesh, c_tau: f64) -> f64 {
    let h = mesh.h_min();
    c_tau * h * h
}

/// Right-hand side `R = −S Y` with the first component zeroed at boundary vertices.
fn zeta_rhs(mesh: &SurfaceMesh, stiffness: &BlockSparseMatrix, ymap: &ReferenceMap) -> Result<Vec<f64>> {
    let mut r = stiffness.matvec(&flatten(ymap.points()))?;
    for (v, chunk) in r.chunks_exact_mut(3).enumerate() {
        for c in chunk.iter_mut() {
            *c = -*c;
        }
        if mesh.is_boundary_vertex(v) {
            chunk[0] = 0.0;
        }
    }
    Ok(r)
}

fn solve_zeta_system(
    mesh: &SurfaceMesh,
    matrix: &BlockSparseMatrix,
    rhs: &[f64],
    guess: Option<&[f64]>,
    solver: &SolverOptions,
) -> Result<(NodalField<Point>, SolveReport)> {
    // triangle areas can vary by orders of magnitude and the constraint rows
    // carry a unit diagonal, so always scale by the diagonal
    let opts = SolverOptions {
        jacobi: true,
        ..*solver
    };
    let (z, report) = cg_solve(matrix, rhs, guess, &opts);
    report.into_result("zeta")?;
    let mut pts = unflatten(&z);
    for (v, p) in pts.iter_mut().enumerate() {
        if mesh.is_boundary_vertex(v) {
            p.x = 0.0;
        }
    }
    Ok((NodalField::new(mesh, pts)?, report))
}

/// Solves `M̃ Z = R` for the tension field ζ.
pub fn solve_zeta(mesh: &SurfaceMesh, ymap: &ReferenceMap, solver: &SolverOptions) -> Result<NodalField<Point>> {
    solve_zeta_with_report(mesh, ymap, 0.0, None, solver).map(|(z, _)| z)
}

/// Solves `(M̃ + εS) Z = R`; the constraint rows of `M̃` are kept.
pub fn solve_zeta_regularized(
    mesh: &SurfaceMesh,
    ymap: &ReferenceMap,
    epsilon: f64,
    solver: &SolverOptions,
) -> Result<NodalField<Point>> {
    solve_zeta_with_report(mesh, ymap, epsilon, None, solver).map(|(z, _)| z)
}

fn solve_zeta_with_report(
    mesh: &SurfaceMesh,
    ymap: &ReferenceMap,
    epsilon: f64,
    guess: Option<&NodalField<Point>>,
    solver: &SolverOptions,
) -> Result<(NodalField<Point>, SolveReport)> {
    ymap.check(mesh)?;
    let guess = guess.filter(|g| g.check(mesh).is_ok()).map(|g| flatten(g.values()));
    let guess = guess.as_deref();
    let stiffness = assemble_stiffness(mesh)?;
    let rhs = zeta_rhs(mesh, &stiffness, ymap)?;
    let mass = assemble_mass_consistent_constrained(mesh);
    if epsilon == 0.0 {
        return solve_zeta_system(mesh, &mass, &rhs, guess, solver);
    }
    let smoothing = stiffness.map_blocks(|i, j, blk| {
        let mut b = *blk;
        if mesh.is_boundary_vertex(i) || mesh.is_boundary_vertex(j) {
            b[(0, 0)] = 0.0;
        }
        b
    });
    let matrix = mass.add_scaled(epsilon, &smoothing)?;
    solve_zeta_system(mesh, &matrix, &rhs, guess, solver)
}

/// `ζ̃_j = P_M(Y_j) ζ_j`.
pub fn project_zeta_tilde(ymap: &ReferenceMap, zeta: &NodalField<Point>) -> Result<NodalField<Point>> {
    if zeta.stamp() != ymap.field().stamp() {
        return Err(Error::StaleField {
            field: zeta.stamp(),
            mesh: ymap.field().stamp(),
        });
    }
    let mut out = zeta.clone();
    for (z, y) in out.values_mut().iter_mut().zip(ymap.points()) {
        *z = ymap.manifold.tangent_projection(y)? * *z;
    }
    Ok(out)
}

/// The DeTurck velocity correction `−(1/α) M⁻¹ D Z̃` at every vertex, using
/// the lumped weights `m` (surface weights inside, curve weights on the
/// boundary).
pub fn deturck_velocity(
    mesh: &SurfaceMesh,
    ymap: &ReferenceMap,
    config: &DeTurckConfig,
    weights: &[f64],
) -> Result<(Vec<Vector3<f64>>, SolveReport)> {
    deturck_velocity_warm(mesh, ymap, config, weights, None).map(|(v, r, _)| (v, r))
}

fn deturck_velocity_warm(
    mesh: &SurfaceMesh,
    ymap: &ReferenceMap,
    config: &DeTurckConfig,
    weights: &[f64],
    guess: Option<&NodalField<Point>>,
) -> Result<(Vec<Vector3<f64>>, SolveReport, NodalField<Point>)> {
    let (zeta, report) = solve_zeta_with_report(mesh, ymap, config.epsilon, guess, &config.solver)?;
    let zt = project_zeta_tilde(ymap, &zeta)?;
    let hhats = compute_all_hhat(mesh, ymap)?;
    let dz = apply_deturck(mesh, &hhats, &zt)?;
    let mut out = Vec::with_capacity(dz.len());
    for (index, (d, &m)) in dz.iter().zip(weights).enumerate() {
        if !(m > 0.0) {
            return Err(Error::NonPositiveDiagonal { index, value: m });
        }
        out.push(-d / (config.alpha * m));
    }
    Ok((out, report, zeta))
}

/// Explicit step `U = U_old + τV − (τ/α) M⁻¹ D Z̃` with nodal velocity `V`
/// sampled at the current positions and time.
pub fn step_update(state: &mut SimState, velocity: &[Vector3<f64>]) -> Result<StepReport> {
    let mesh = &state.mesh;
    if velocity.len() != mesh.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: mesh.vertex_count(),
            got: velocity.len(),
        });
    }
    let tau = state.time_step();
    let weights = lumped_weights(mesh);
    let (correction, report, zeta) =
        deturck_velocity_warm(mesh, &state.ymap, &state.config, &weights, state.warm.as_ref())?;
    state.warm = Some(zeta);
    let new = mesh
        .vertices()
        .iter()
        .zip(velocity)
        .zip(&correction)
        .map(|((x, v), c)| x + v * tau + c * tau)
        .collect();
    state.commit(new, tau, Some(report))
}

/// Moves vertices with the material velocity only.
pub fn naive_step(state: &mut SimState, velocity: &[Vector3<f64>]) -> Result<StepReport> {
    if velocity.len() != state.mesh.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: state.mesh.vertex_count(),
            got: velocity.len(),
        });
    }
    let tau = state.time_step();
    let new = state
        .mesh
        .vertices()
        .iter()
        .zip(velocity)
        .map(|(x, v)| x + v * tau)
        .collect();
    state.commit(new, tau, None)
}

/// Solves `(M/τ + S) U = M U_old / τ + M·extra` componentwise on interior
/// vertices with `boundary` prescribing the boundary positions. `M` is the
/// surface lumped mass.
pub(crate) fn implicit_mcf_positions(
    mesh: &SurfaceMesh,
    tau: f64,
    extra: &[Vector3<f64>],
    boundary: &[Point],
    solver: &SolverOptions,
) -> Result<Vec<Point>> {
    let s = scalar_stiffness(mesh)?;
    let m = surface_lumped_weights(mesh);
    let mut builder = CsrBuilder::new(mesh.vertex_count());
    for i in 0..s.n() {
        builder.add(i, i, m[i] / tau);
        for (j, v) in s.row(i) {
            builder.add(i, j, v);
        }
    }
    let a = builder.finish();
    let fixed = mesh.boundary_vertex_mask();
    let mut out = mesh.vertices().to_vec();
    for c in 0..3 {
        let rhs: Vec<f64> = (0..mesh.vertex_count())
            .map(|i| m[i] * (mesh.vertex(i)[c] / tau + extra[i][c]))
            .collect();
        let values: Vec<f64> = boundary.iter().map(|p| p[c]).collect();
        let (ac, bc) = a.with_dirichlet(&fixed, &values, &rhs);
        let x0: Vec<f64> = mesh.vertices().iter().map(|p| p[c]).collect();
        let (x, report) = cg_solve(&ac, &bc, Some(&x0), solver);
        report.into_result("mcf")?;
        for (p, xi) in out.iter_mut().zip(x) {
            p[c] = xi;
        }
    }
    Ok(out)
}

/// Mean curvature flow with fixed boundary curve, reparametrized: interior
/// vertices solve `(M/τ + S) U = M U_old/τ − (1/α) D Z̃`, boundary vertices
/// take the explicit tangential DeTurck update.
pub fn mcf_deturck_step(state: &mut SimState) -> Result<StepReport> {
    let mesh = &state.mesh;
    let tau = state.time_step();
    let weights = lumped_weights(mesh);
    let (correction, report, zeta) =
        deturck_velocity_warm(mesh, &state.ymap, &state.config, &weights, state.warm.as_ref())?;
    state.warm = Some(zeta);
    // interior rows carry (1/α) D Z̃ against the surface lumped mass, which
    // matches `weights` away from the boundary
    let boundary: Vec<Point> = mesh
        .vertices()
        .iter()
        .zip(&correction)
        .map(|(x, c)| x + c * tau)
        .collect();
    let new = implicit_mcf_positions(mesh, tau, &correction, &boundary, &state.config.solver)?;
    state.commit(new, tau, Some(report))
}

/// Plain implicit mean curvature flow with the boundary held fixed.
pub fn mcf_baseline_step(state: &mut SimState) -> Result<StepReport> {
    let tau = state.time_step();
    let zero = vec![Vector3::zeros(); state.mesh.vertex_count()];
    let new = implicit_mcf_positions(&state.mesh, tau, &zero, state.mesh.vertices(), &state.config.solver)?;
    state.commit(new, tau, None)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Degeneration {
    SmallTriangle { triangle: usize, ratio: f64 },
    QualityCeiling { sigma_max: f64 },
    Fold { triangles: (usize, usize) },
}

impl std::fmt::Display for Degeneration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Degeneration::SmallTriangle { triangle, ratio } => {
                write!(f, "triangle {triangle} collapsed (area/h² = {ratio:.3e})")
            }
            Degeneration::QualityCeiling { sigma_max } => write!(f, "sigma_max {sigma_max:.3e} above ceiling"),
            Degeneration::Fold { triangles } => {
                write!(f, "mesh folded between triangles {} and {}", triangles.0, triangles.1)
            }
        }
    }
}

/// Checks for collapsed triangles, quality above `sigma_ceiling`, and
/// folds (neighbouring triangles with opposing normals).
pub fn detect_degeneration(mesh: &SurfaceMesh, sigma_ceiling: f64) -> Option<Degeneration> {
    let crosses: Vec<Vector3<f64>> = (0..mesh.triangle_count()).map(|t| mesh.triangle_cross(t)).collect();
    for t in 0..mesh.triangle_count() {
        let h = mesh.triangle_diameter(t);
        let ratio = 0.5 * crosses[t].norm() / (h * h);
        if !(ratio >= STEP_DEGENERATE_RATIO) {
            return Some(Degeneration::SmallTriangle { triangle: t, ratio });
        }
    }
    for t in 0..mesh.triangle_count() {
        for k in 0..3 {
            if let Some(u) = mesh.neighbor(t, k) {
                if u > t && crosses[t].dot(&crosses[u]) < 0.0 {
                    return Some(Degeneration::Fold { triangles: (t, u) });
                }
            }
        }
    }
    match mesh.sigma_max() {
        Ok(s) if s <= sigma_ceiling => None,
        Ok(s) => Some(Degeneration::QualityCeiling { sigma_max: s }),
        Err(_) => Some(Degeneration::QualityCeiling {
            sigma_max: f64::INFINITY,
        }),
    }
}

/// Largest Euclidean norm in a nodal vector field.
pub fn max_norm(values: &[Vector3<f64>]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `D Z̃` for the current state, exposed for diagnostics.
pub fn deturck_rhs(mesh: &SurfaceMesh, ymap: &ReferenceMap, config: &DeTurckConfig) -> Result<Vec<Point>> {
    let zeta = solve_zeta_regularized(mesh, ymap, config.epsilon, &config.solver)?;
    let zt = project_zeta_tilde(ymap, &zeta)?;
    let hhats = compute_all_hhat(mesh, ymap)?;
    apply_deturck(mesh, &hhats, &zt)
}

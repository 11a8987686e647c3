//! The experiments: prescribed velocities, harmonic velocity extension,
//! mean curvature flow, Hele-Shaw flow and advection-diffusion on the moving
//! mesh, together with a driver that interleaves steps and adaptation.

pub mod ale;
pub mod fields;
pub mod harmonic;
pub mod heleshaw;
pub mod setup;

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::adapt::{adapt_cycle, AdaptConfig, AdaptReport};
use crate::deturck::{
    detect_degeneration, mcf_baseline_step, mcf_deturck_step, naive_step, step_update, DeTurckConfig, SimState,
    StepReport,
};
use crate::error::{Error, Result};
use crate::linalg::SolverOptions;
use crate::mesh::{NodalField, Point, SurfaceMesh};

use ale::{ale_step, AleState};
use fields::{ale_velocity, velocity_example21, velocity_example31, Example1Deformation};
use harmonic::{harmonic_velocity_extension, rotating_hole_velocity};
use heleshaw::HeleShawState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityKind {
    Analytic,
    HarmonicExtension,
    HeleShaw,
    Zero,
}

/// Material velocity driving the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityField {
    Zero,
    Example1(Example1Deformation),
    Example21,
    Example31,
    /// Medium velocity of the advection-diffusion experiment.
    Ale,
    /// Harmonic extension of the rotating-hole boundary data.
    RotatingHole,
    HeleShaw {
        sink: Point,
        sigma: f64,
    },
}

impl VelocityField {
    pub fn kind(&self) -> VelocityKind {
        match self {
            VelocityField::Zero => VelocityKind::Zero,
            VelocityField::Example1(_) | VelocityField::Example21 | VelocityField::Example31 | VelocityField::Ale => {
                VelocityKind::Analytic
            }
            VelocityField::RotatingHole => VelocityKind::HarmonicExtension,
            VelocityField::HeleShaw { .. } => VelocityKind::HeleShaw,
        }
    }

    /// Pointwise value for closed-form fields; `None` for fields that need
    /// a solve on the mesh.
    pub fn sample(&self, x: &Point, t: f64) -> Option<Vector3<f64>> {
        match self {
            VelocityField::Zero => Some(Vector3::zeros()),
            VelocityField::Example1(d) => Some(d.velocity(x, t)),
            VelocityField::Example21 => Some(velocity_example21(x, t)),
            VelocityField::Example31 => Some(velocity_example31(x, t)),
            VelocityField::Ale => Some(ale_velocity(x, t)),
            VelocityField::RotatingHole | VelocityField::HeleShaw { .. } => None,
        }
    }

    /// Nodal velocity on the current mesh at time `t`.
    pub fn nodal(&self, mesh: &SurfaceMesh, t: f64, solver: &SolverOptions) -> Result<NodalField<Vector3<f64>>> {
        match self {
            VelocityField::RotatingHole => {
                harmonic_velocity_extension(mesh, rotating_hole_velocity(t), Vector3::zeros(), solver)
            }
            VelocityField::HeleShaw { sink, sigma } => Ok(HeleShawState::solve(mesh, *sink, *sigma, solver)?.velocity),
            _ => Ok(NodalField::from_fn(mesh, |v| {
                self.sample(&mesh.vertex(v), t).expect("closed-form field")
            })),
        }
    }
}

/// What moves the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dynamics {
    Advect(VelocityField),
    /// Mean curvature flow with the boundary curve held fixed.
    MeanCurvature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSummary {
    pub step: StepReport,
    pub adapt: Option<AdaptReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed,
    Degenerated { time: f64, reason: String },
}

/// One experiment in progress.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub state: SimState,
    pub dynamics: Dynamics,
    /// Without it vertices move with the material velocity, or by the plain
    /// implicit scheme for mean curvature flow.
    pub deturck: bool,
    pub adapt: AdaptConfig,
    pub ale: Option<AleState>,
    pub adapt_log: Vec<AdaptReport>,
    /// Problem-specific monitor: the nodal error for advection-diffusion,
    /// `max |p̃|` for Hele-Shaw.
    pub monitor: Option<f64>,
}

impl Simulation {
    pub fn new(state: SimState, dynamics: Dynamics, deturck: bool, adapt: AdaptConfig) -> Self {
        Simulation {
            state,
            dynamics,
            deturck,
            adapt,
            ale: None,
            adapt_log: Vec::new(),
            monitor: None,
        }
    }

    pub fn with_ale(mut self, ale: AleState) -> Self {
        self.monitor = ale.max_error(&self.state.mesh, self.state.time).ok();
        self.ale = Some(ale);
        self
    }

    /// One time step followed by an adaptation event when one is due.
    /// Negative times belong to the preparatory deformation phase: vertices
    /// follow the material velocity and the mesh is not adapted.
    pub fn step(&mut self) -> Result<StepSummary> {
        let t_old = self.state.time;
        let solver = self.state.config.solver;
        let preparing = t_old < 0.0;
        let old_mesh = self.ale.as_ref().map(|_| self.state.mesh.clone());
        let (report, material) = match self.dynamics {
            Dynamics::MeanCurvature if self.deturck => (mcf_deturck_step(&mut self.state)?, None),
            Dynamics::MeanCurvature => (mcf_baseline_step(&mut self.state)?, None),
            Dynamics::Advect(field) => {
                let v = match field {
                    VelocityField::HeleShaw { sink, sigma } => {
                        let hs = HeleShawState::solve(&self.state.mesh, sink, sigma, &solver)?;
                        self.monitor = Some(hs.pressure.values().iter().map(|p| p.abs()).fold(0.0, f64::max));
                        hs.velocity
                    }
                    _ => field.nodal(&self.state.mesh, t_old, &solver)?,
                };
                let v = v.into_values();
                let report = if self.deturck && !preparing {
                    step_update(&mut self.state, &v)?
                } else {
                    naive_step(&mut self.state, &v)?
                };
                (report, Some(v))
            }
        };
        if let (Some(ale), Some(old)) = (self.ale.as_mut(), old_mesh.as_ref()) {
            let zero;
            let material = match &material {
                Some(v) => v.as_slice(),
                None => {
                    zero = vec![Vector3::zeros(); old.vertex_count()];
                    &zero
                }
            };
            ale_step(
                ale,
                old,
                &self.state.mesh,
                material,
                report.tau,
                self.state.time,
                &solver,
            )?;
        }
        let mut adapt = None;
        if !preparing && self.adapt.fires(t_old, self.state.time) {
            let (transfer, rep) = adapt_cycle(&mut self.state, &self.adapt)?;
            if let Some(ale) = self.ale.as_mut() {
                let p = transfer.apply_scalar(ale.concentration.values())?;
                ale.concentration = NodalField::new(&self.state.mesh, p)?;
            }
            self.adapt_log.push(rep);
            adapt = Some(rep);
        }
        if let Some(ale) = &self.ale {
            self.monitor = Some(ale.max_error(&self.state.mesh, self.state.time)?);
        }
        Ok(StepSummary { step: report, adapt })
    }

    /// Steps until `t_end` or until the mesh degenerates. `observe` runs
    /// after every completed step.
    pub fn run(
        &mut self,
        t_end: f64,
        mut observe: impl FnMut(&Simulation, &StepSummary) -> Result<()>,
    ) -> Result<RunOutcome> {
        while self.state.time < t_end {
            let summary = match self.step() {
                Ok(s) => s,
                Err(e @ (Error::DegenerateTriangle { .. } | Error::SingularParametrization { .. })) => {
                    return Ok(RunOutcome::Degenerated {
                        time: self.state.time,
                        reason: e.to_string(),
                    });
                }
                Err(e) => return Err(e),
            };
            observe(self, &summary)?;
            if let Some(d) = detect_degeneration(&self.state.mesh, self.state.config.sigma_ceiling) {
                return Ok(RunOutcome::Degenerated {
                    time: self.state.time,
                    reason: d.to_string(),
                });
            }
        }
        Ok(RunOutcome::Completed)
    }
}

/// The built-in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Example {
    /// Repairing a deliberately distorted disk mesh.
    Ex1,
    /// Unit disk under a shearing planar velocity.
    Ex21,
    /// Annulus whose hole circles inside the outer disk.
    Ex22,
    /// Unit disk lifted out of its plane.
    Ex31,
    /// Mean curvature flow of a wavy graph with fixed boundary.
    Ex32Mcf,
    /// Hele-Shaw flow with a point sink.
    Ex4HeleShaw,
    /// Advection-diffusion with a manufactured solution on a moving annulus.
    Ex5Ale,
}

impl Example {
    pub const ALL: [Example; 7] = [
        Example::Ex1,
        Example::Ex21,
        Example::Ex22,
        Example::Ex31,
        Example::Ex32Mcf,
        Example::Ex4HeleShaw,
        Example::Ex5Ale,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Example::Ex1 => "ex1",
            Example::Ex21 => "ex21",
            Example::Ex22 => "ex22",
            Example::Ex31 => "ex31",
            Example::Ex32Mcf => "ex32-mcf",
            Example::Ex4HeleShaw => "ex4-heleshaw",
            Example::Ex5Ale => "ex5-ale",
        }
    }

    /// Published parameters `(c_tau, alpha, t_adapt, end time)`.
    pub fn parameters(&self) -> (f64, f64, f64, f64) {
        match self {
            Example::Ex1 => (0.005, 1.0, 1e-3, 0.2),
            Example::Ex21 => (0.02, 1.0, 0.01, 1.0),
            Example::Ex22 => (0.001, 0.1, 1e-3, 1.0),
            Example::Ex31 => (0.02, 1.0, 1e-3, 0.8),
            Example::Ex32Mcf => (0.01, 1.0, 1e-3, 1.0),
            Example::Ex4HeleShaw => (0.005, 1.0, 0.01, 5.34),
            Example::Ex5Ale => (0.001, 0.1, 1e-3, 1.0),
        }
    }

    /// Builds the initial state. `t_adapt = None` disables adaptation.
    pub fn build(&self, params: &ExampleParams) -> Result<Simulation> {
        let level = params.level;
        let (mesh, ymap) = match self {
            Example::Ex22 | Example::Ex5Ale => setup::annulus(level)?,
            Example::Ex32Mcf => setup::mcf_example32_initial(level)?,
            Example::Ex4HeleShaw => setup::disk(level, Point::new(0.0, -0.5, 0.0))?,
            _ => setup::disk(level, Point::zeros())?,
        };
        let start = match self {
            Example::Ex1 => -params.deformation.duration,
            _ => 0.0,
        };
        let state = SimState::new(mesh, ymap, start, params.config)?;
        let adapt = match params.t_adapt {
            Some(t) if t > 0.0 => AdaptConfig::new(t, &state.mesh),
            Some(t) => return Err(Error::Config(format!("t_adapt must be positive, got {t}"))),
            None => AdaptConfig::disabled(),
        };
        let dynamics = match self {
            Example::Ex1 => Dynamics::Advect(VelocityField::Example1(params.deformation)),
            Example::Ex21 => Dynamics::Advect(VelocityField::Example21),
            Example::Ex22 => Dynamics::Advect(VelocityField::RotatingHole),
            Example::Ex31 => Dynamics::Advect(VelocityField::Example31),
            Example::Ex32Mcf => Dynamics::MeanCurvature,
            Example::Ex4HeleShaw => Dynamics::Advect(VelocityField::HeleShaw {
                sink: Point::zeros(),
                sigma: params.sigma,
            }),
            Example::Ex5Ale => Dynamics::Advect(VelocityField::Ale),
        };
        let sim = Simulation::new(state, dynamics, params.deturck, adapt);
        if *self == Example::Ex5Ale {
            let ale = AleState::manufactured(&sim.state.mesh, 0.0, params.diffusivity)?;
            return Ok(sim.with_ale(ale));
        }
        Ok(sim)
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Example::ALL.into_iter().find(|e| e.id() == s).ok_or_else(|| {
            let ids: Vec<&str> = Example::ALL.iter().map(|e| e.id()).collect();
            Error::Config(format!("unknown example '{s}', expected one of {}", ids.join(", ")))
        })
    }
}

/// Knobs shared by all experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleParams {
    pub level: usize,
    pub config: DeTurckConfig,
    pub t_adapt: Option<f64>,
    pub deturck: bool,
    /// Surface tension of the Hele-Shaw experiment.
    pub sigma: f64,
    /// Diffusivity of the advection-diffusion experiment.
    pub diffusivity: f64,
    pub deformation: Example1Deformation,
}

impl ExampleParams {
    /// Published parameters of `example` at refinement `level`.
    pub fn published(example: Example, level: usize) -> Self {
        let (c_tau, alpha, t_adapt, _) = example.parameters();
        ExampleParams {
            level,
            config: DeTurckConfig {
                c_tau,
                alpha,
                ..DeTurckConfig::default()
            },
            t_adapt: Some(t_adapt),
            deturck: true,
            sigma: 1e-3,
            diffusivity: 2.0,
            deformation: Example1Deformation::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn zero_field_is_zero() {
        let f = VelocityField::Zero;
        assert_eq!(f.kind(), VelocityKind::Zero);
        assert_eq!(f.sample(&Point::new(3.0, -1.0, 2.0), 0.4), Some(Vector3::zeros()));
        assert_eq!(VelocityField::RotatingHole.sample(&Point::zeros(), 0.0), None);
    }

    #[test]
    fn example_ids_round_trip() {
        for e in Example::ALL {
            assert_eq!(e.id().parse::<Example>().unwrap(), e);
        }
        let err = "ex9".parse::<Example>().unwrap_err().to_string();
        assert!(err.contains("ex32-mcf"));
    }

    #[test]
    fn flat_disk_is_stationary_under_both_mcf_schemes() {
        let (mesh, ymap) = setup::disk(2, Point::zeros()).unwrap();
        for deturck in [false, true] {
            let state = SimState::new(mesh.clone(), ymap.clone(), 0.0, DeTurckConfig::default()).unwrap();
            let mut sim = Simulation::new(state, Dynamics::MeanCurvature, deturck, AdaptConfig::disabled());
            for _ in 0..5 {
                sim.step().unwrap();
            }
            for (a, b) in sim.state.mesh.vertices().iter().zip(mesh.vertices()) {
                assert_abs_diff_eq!(a.z, 0.0, epsilon = 1e-12);
                if !deturck {
                    assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn baseline_mcf_shrinks_a_paraboloid_cap() {
        let (mesh, ymap) = setup::disk_graph(3, |r, phi| {
            Point::new(r * phi.cos(), r * phi.sin(), 0.5 * (1.0 - r * r))
        })
        .unwrap();
        let boundary: Vec<Point> = mesh.boundary_loops()[0].iter().map(|&v| mesh.vertex(v)).collect();
        let state = SimState::new(mesh, ymap, 0.0, DeTurckConfig::default()).unwrap();
        let mut sim = Simulation::new(state, Dynamics::MeanCurvature, false, AdaptConfig::disabled());
        let mut area = sim.state.mesh.total_area();
        for _ in 0..20 {
            sim.step().unwrap();
            let a = sim.state.mesh.total_area();
            assert!(a < area);
            area = a;
        }
        let after: Vec<Point> = sim.state.mesh.boundary_loops()[0]
            .iter()
            .map(|&v| sim.state.mesh.vertex(v))
            .collect();
        assert_eq!(boundary, after);
    }

    #[test]
    fn example1_deforms_then_repairs() {
        let mut params = ExampleParams::published(Example::Ex1, 2);
        params.t_adapt = None;
        let mut sim = Example::Ex1.build(&params).unwrap();
        let before = sim.state.mesh.sigma_max().unwrap();
        while sim.state.time < 0.0 {
            sim.step().unwrap();
        }
        let deformed = sim.state.mesh.sigma_max().unwrap();
        assert!(deformed > before);
        let outcome = sim.run(0.02, |_, _| Ok(())).unwrap();
        assert_eq!(outcome, RunOutcome::Completed);
        assert!(sim.state.mesh.sigma_max().unwrap() < deformed);
    }

    #[test]
    fn ale_run_tracks_the_exact_solution() {
        let mut params = ExampleParams::published(Example::Ex5Ale, 3);
        params.config.c_tau = 0.01;
        params.config.alpha = 1.0;
        params.t_adapt = None;
        let mut sim = Example::Ex5Ale.build(&params).unwrap();
        assert_eq!(sim.monitor, Some(0.0));
        sim.run(0.01, |_, _| Ok(())).unwrap();
        let err = sim.monitor.unwrap();
        assert!(err > 0.0 && err < 0.03, "error {err}");
    }
}

//! Drives one configured run and writes its snapshots.

use std::path::PathBuf;

use crate::adapt::AdaptConfig;
use crate::deturck::SimState;
use crate::error::{Error, Result};
use crate::mesh::SurfaceMesh;
use crate::problems::{Dynamics, Example, RunOutcome, Simulation, VelocityField};
use crate::reference::ReferenceMap;

use super::config::{CustomDynamics, CustomInput, ExampleId, RunConfig};
use super::series::{write_series, Series, SeriesRow};
use super::vtk::{read_mesh, write_mesh, PointData};
use super::write_atomic;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub outcome: RunOutcome,
    pub series: Series,
    pub snapshots: Vec<PathBuf>,
}

fn build_custom(custom: &CustomInput, config: &RunConfig) -> Result<Simulation> {
    let data = read_mesh(&custom.input)?;
    let reference = data
        .point_vectors("reference")
        .ok_or_else(|| Error::Config(format!("{} has no 'reference' point vectors", custom.input.display())))?
        .to_vec();
    let mesh = SurfaceMesh::new(data.vertices, data.triangles)?;
    let ymap = ReferenceMap::new(custom.manifold, &mesh, reference)?;
    let state = SimState::new(mesh, ymap, 0.0, config.deturck_config())?;
    let adapt = match config.t_adapt {
        Some(t) => AdaptConfig::new(t, &state.mesh),
        None => AdaptConfig::disabled(),
    };
    let dynamics = match custom.dynamics {
        CustomDynamics::Redistribute => Dynamics::Advect(VelocityField::Zero),
        CustomDynamics::MeanCurvature => Dynamics::MeanCurvature,
    };
    Ok(Simulation::new(state, dynamics, config.deturck, adapt))
}

pub fn build_simulation(config: &RunConfig) -> Result<Simulation> {
    match (config.example, &config.custom) {
        (ExampleId::Builtin(e), _) => e.build(&config.example_params()),
        (ExampleId::Custom, Some(custom)) => build_custom(custom, config),
        (ExampleId::Custom, None) => Err(Error::Config("custom example needs 'input'".into())),
    }
}

/// Name of the problem-specific series column.
pub fn monitor_name(example: ExampleId) -> Option<&'static str> {
    match example {
        ExampleId::Builtin(Example::Ex4HeleShaw) => Some("pressure_max"),
        ExampleId::Builtin(Example::Ex5Ale) => Some("error_max"),
        _ => None,
    }
}

struct Recorder {
    dir: PathBuf,
    series: Series,
    snapshots: Vec<PathBuf>,
}

impl Recorder {
    fn record(&mut self, sim: &Simulation) -> Result<()> {
        let st = &sim.state;
        if self.series.rows.last().is_some_and(|r| r.step == st.step) {
            return Ok(());
        }
        self.series
            .rows
            .push(SeriesRow::of(&st.mesh, st.step, st.time, sim.monitor)?);
        let mut fields = vec![PointData::Vector("reference", st.ymap.points())];
        if let Some(ale) = &sim.ale {
            fields.push(PointData::Scalar("concentration", ale.concentration.values()));
        }
        let path = self.dir.join(format!("mesh_{}.vtk", st.step));
        write_mesh(
            &path,
            &st.mesh,
            &format!("step {} time {:e}", st.step, st.time),
            &fields,
        )?;
        self.snapshots.push(path);
        write_series(&self.series, &self.dir.join("series.csv"))
    }
}

/// Runs `config` to its end time, writing `mesh_<step>.vtk` snapshots,
/// `series.csv` and a one-line `status.txt` into the output directory.
/// Degeneration ends the run early and is reported in the outcome.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let mut sim = build_simulation(config)?;
    std::fs::create_dir_all(&config.output).map_err(|e| Error::io(&config.output, e))?;
    let mut rec = Recorder {
        dir: config.output.clone(),
        series: Series::new(monitor_name(config.example)),
        snapshots: Vec::new(),
    };
    rec.record(&sim)?;
    let mut next = sim.state.time + config.snapshot_interval;
    let outcome = sim.run(config.t_end, |s, _| {
        if s.state.time >= next {
            rec.record(s)?;
            while next <= s.state.time {
                next += config.snapshot_interval;
            }
        }
        Ok(())
    })?;
    rec.record(&sim)?;
    let status = match &outcome {
        RunOutcome::Completed => format!("completed t={:e}\n", sim.state.time),
        RunOutcome::Degenerated { time, reason } => format!("degenerated t={time:e} {reason}\n"),
    };
    write_atomic(&config.output.join("status.txt"), &status)?;
    Ok(RunSummary {
        outcome,
        series: rec.series,
        snapshots: rec.snapshots,
    })
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use super::*;
    use crate::io::vtk::read_mesh;

    fn config(text: &str, dir: &Path) -> RunConfig {
        let text = format!("{text} output={}", dir.display());
        RunConfig::parse(&text, Path::new("test")).unwrap()
    }

    #[test]
    fn snapshots_match_the_series() {
        let dir = tempfile::tempdir().unwrap();
        let c = config("example=ex21 level=2 T=0.02 snapshot_interval=0.005", dir.path());
        let summary = run(&c).unwrap();
        assert_eq!(summary.outcome, RunOutcome::Completed);
        let rows = &summary.series.rows;
        assert!(rows.len() >= 5);
        assert!(rows.windows(2).all(|w| w[0].time < w[1].time));
        for (row, path) in rows.iter().zip(&summary.snapshots) {
            let data = read_mesh(path).unwrap();
            let mesh = SurfaceMesh::new(data.vertices, data.triangles).unwrap();
            assert_eq!(mesh.sigma_max().unwrap(), row.sigma_max);
        }
        let csv = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
        assert_eq!(csv, summary.series.render());
        let status = std::fs::read_to_string(dir.path().join("status.txt")).unwrap();
        assert!(status.starts_with("completed"));
    }

    #[test]
    fn identical_configs_give_identical_series() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let text = "example=ex31 level=2 T=0.01 t_adapt=0.002";
        run(&config(text, a.path())).unwrap();
        run(&config(text, b.path())).unwrap();
        let read = |d: &Path| std::fs::read(d.join("series.csv")).unwrap();
        assert_eq!(read(a.path()), read(b.path()));
    }

    #[test]
    fn ale_run_emits_the_error_column() {
        let dir = tempfile::tempdir().unwrap();
        let c = config("example=ex5 level=2 c_tau=0.01 alpha=1 T=0.002", dir.path());
        let summary = run(&c).unwrap();
        assert_eq!(summary.series.monitor.as_deref(), Some("error_max"));
        assert!(summary.series.rows.iter().all(|r| r.monitor.is_some()));
        let last = read_mesh(summary.snapshots.last().unwrap()).unwrap();
        assert!(last.point_scalars("concentration").is_some());
    }

    #[test]
    fn custom_run_reads_a_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let first = config("example=ex1 level=2 T=0.001 snapshot_interval=1", dir.path());
        let summary = run(&first).unwrap();
        let input = summary.snapshots.last().unwrap().display().to_string();
        let out = dir.path().join("custom");
        let text = format!(
            "example=custom input={input} manifold=half-sphere T=0.001 output={}",
            out.display()
        );
        let c = RunConfig::parse(&text, Path::new("test")).unwrap();
        let custom = run(&c).unwrap();
        assert_eq!(custom.outcome, RunOutcome::Completed);
        assert!(out.join("series.csv").exists());
    }
}

//! Per-snapshot scalar time series written as CSV.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::mesh::SurfaceMesh;

use super::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub step: usize,
    pub time: f64,
    pub sigma_max: f64,
    pub h_min: f64,
    pub triangle_count: usize,
    pub vertex_count: usize,
    pub total_area: f64,
    pub monitor: Option<f64>,
}

impl SeriesRow {
    pub fn of(mesh: &SurfaceMesh, step: usize, time: f64, monitor: Option<f64>) -> Result<Self> {
        Ok(SeriesRow {
            step,
            time,
            sigma_max: mesh.sigma_max()?,
            h_min: mesh.h_min(),
            triangle_count: mesh.triangle_count(),
            vertex_count: mesh.vertex_count(),
            total_area: mesh.total_area(),
            monitor,
        })
    }
}

/// Rows plus the name of the optional problem-specific column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Series {
    pub monitor: Option<String>,
    pub rows: Vec<SeriesRow>,
}

impl Series {
    pub fn new(monitor: Option<&str>) -> Self {
        Series {
            monitor: monitor.map(str::to_string),
            rows: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::from("step,time,sigma_max,h_min,triangle_count,vertex_count,total_area");
        if let Some(m) = &self.monitor {
            write!(out, ",{m}").unwrap();
        }
        out.push('\n');
        for r in &self.rows {
            write!(
                out,
                "{},{:e},{:e},{:e},{},{},{:e}",
                r.step, r.time, r.sigma_max, r.h_min, r.triangle_count, r.vertex_count, r.total_area
            )
            .unwrap();
            if self.monitor.is_some() {
                match r.monitor {
                    Some(v) => write!(out, ",{v:e}").unwrap(),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn write_series(series: &Series, path: &Path) -> Result<()> {
    write_atomic(path, &series.render())
}

//! Run configuration, mesh and series files, and the run driver behind the
//! command line tool.

pub mod config;
pub mod runner;
pub mod series;
pub mod vtk;

use std::path::Path;

use crate::error::{Error, Result};

pub use config::{ExampleId, RunConfig};
pub use runner::{run, RunSummary};
pub use series::{write_series, Series, SeriesRow};
pub use vtk::{read_mesh, write_mesh, PointData, VtkMesh};

/// Writes `contents` next to `path` and renames it into place.
pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

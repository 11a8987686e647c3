use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex index {index} out of range (vertex count {count})")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("triangle {triangle} repeats vertex indices")]
    RepeatedVertex { triangle: usize },
    #[error("triangle {triangle} duplicates triangle {other}")]
    DuplicateTriangle { triangle: usize, other: usize },
    #[error("edge ({a}, {b}) is shared by more than two triangles")]
    NonManifoldEdge { a: usize, b: usize },
    #[error("boundary vertex {vertex} is not incident to exactly two boundary edges")]
    NonManifoldVertex { vertex: usize },
    #[error("edge ({a}, {b}) is traversed in the same direction by two triangles")]
    InconsistentOrientation { a: usize, b: usize },
    #[error("triangle {triangle} is degenerate (area {area:e}, diameter {diameter:e})")]
    DegenerateTriangle { triangle: usize, area: f64, diameter: f64 },
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("vertex {vertex} is not a boundary vertex")]
    NotBoundaryVertex { vertex: usize },
    #[error("co-normals at boundary vertex {vertex} cancel")]
    ZeroConormalSum { vertex: usize },
    #[error("boundary tangents at vertex {vertex} cancel")]
    ZeroTangentSum { vertex: usize },
    #[error("point ({x}, {y}, {z}) is off the reference manifold (distance {distance:e})")]
    OffManifold { x: f64, y: f64, z: f64, distance: f64 },
    #[error("point ({x}, {y}, {z}) is not on the boundary of the reference manifold")]
    NotOnManifoldBoundary { x: f64, y: f64, z: f64 },
    #[error("projection direction is undefined at the origin")]
    UndefinedDirection,
    #[error("invalid annulus radii: inner {inner}, outer {outer}")]
    InvalidRadii { inner: f64, outer: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("diagonal entry {index} is not positive ({value:e})")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("{solver} did not converge: {iterations} iterations, relative residual {residual:e}")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("parametrization degenerates on triangle {triangle} (condition number {condition:e})")]
    SingularParametrization { triangle: usize, condition: f64 },
    #[error("nodal field is stale: stamped {field}, mesh is {mesh}")]
    StaleField { field: u64, mesh: u64 },
    #[error("bisection forest inconsistency: {0}")]
    Forest(String),
    #[error("vertex {vertex} coincides with the sink")]
    VertexAtSink { vertex: usize },
    #[error("mesh degenerated at t = {time}: {reason}")]
    Degenerated { time: f64, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

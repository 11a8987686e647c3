//! Evolving triangulated surfaces with boundary in R³ with harmonic-map
//! reparametrization and area-equilibrating mesh adaptation.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod adapt;
pub mod assembly;
pub mod deturck;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod reference;

pub use deturck::{DeTurckConfig, SimState};
pub use error::{Error, Result};
pub use mesh::{NodalField, Point, SurfaceMesh};
pub use reference::{ReferenceManifold, ReferenceMap};

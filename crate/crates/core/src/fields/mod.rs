//! Periodic grid, field containers and spectral calculus.

mod field;
mod grid;
pub mod interp;
pub mod ops;
mod snapshot;
pub mod spectral;

pub use field::{Axis, Mask, ScalarField, VectorField};
pub use grid::Grid;
pub use ops::{heat_semigroup, leray_project, norm_lp, sobolev_norm, spectral_derivative};
pub use snapshot::Snapshot;

//! Simulator and verification harness for density patches in the 2D
//! inhomogeneous incompressible Navier–Stokes equations.

pub mod besov;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod lagrangian;
pub mod patch;
pub mod solver;
pub mod stokes;
pub mod transport;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

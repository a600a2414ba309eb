//! Variable-density Navier–Stokes stepper with vacuum lifting.

mod checkpoint;
mod config;
mod functionals;
mod linalg;
mod linearized;
mod state;
mod step;

pub use checkpoint::{write_checkpoint, CheckpointFiles};
pub use config::{SimConfig, VelocitySpec};
pub use functionals::{
    a_functionals, material_derivative, AFunctionalTracker, AFunctionals, MaterialSlice, Slice,
};
pub use linalg::{solve_pressure, SolveStats};
pub use linearized::solve_linearized;
pub use state::{initial_density, kinetic_energy, Ledger, SimState, StepStats};
pub use step::{run, step, step_by};

pub(crate) use step::rk2_points;

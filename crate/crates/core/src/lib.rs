//! Randomized Kaczmarz-type solvers for overdetermined least-squares problems.
//!
//! The crate provides row and column block variants, paving diagnostics,
//! evaluators for the theoretical convergence bounds and a small experiment
//! harness.

pub mod cpu_time;
pub mod error;
pub mod io;
pub mod harness;
pub mod linalg;
pub mod paving;
pub mod solvers;
pub mod system;
pub mod theory;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use paving::{Axis, Partition};
pub use solvers::{Method, MethodConfig, Solver, SolverState, StopRule, Trace};
pub use system::LinearSystem;

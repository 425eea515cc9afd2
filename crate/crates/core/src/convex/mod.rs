//! Dense complex-Hermitian conic solver and spectral utilities.
//!
//! Sized for the beamforming programs in this crate: a handful of PSD blocks
//! of dimension up to a few dozen, tens of linear constraints, and LPs as the
//! all-scalar special case.

pub mod hermitian;
pub mod ipm;
pub mod problem;

pub use hermitian::{HermitianEigen, HermitianMatrix};
pub use ipm::solve_conic;
pub use problem::{ConicProblem, ConicSolution, Constraint, LinearForm, Sense, SolveStatus, SolverSettings};

//! Manufactured solution, error norms and convergence studies.

pub mod exact;
pub mod fd;
pub mod norms;
pub mod poly;
pub mod study;

pub use exact::{build_loads, ExactSolution};
pub use fd::{run_fd_gate, validate, Evaluators, FdReport, Field};
pub use norms::{error_norm, rate, Norm};
pub use poly::{Poly1D, SeparableField};
pub use study::{run_convergence_study, Column, Constraints, ConvergenceReport, ConvergenceRow, Mode};

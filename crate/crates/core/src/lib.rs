//! Finite elements for the static interaction of a 3D Stokes fluid with a
//! clamped 2D Kirchhoff plate lying on the top face of the fluid box.
//!
//! The fluid is discretized with Taylor–Hood (P2/P1) tetrahedra, the plate
//! displacement with the Morley triangle and the plate velocity with P2
//! Lagrange triangles. Two solution strategies are provided:
//!
//! * [`coupling::run_partitioned`]: alternate Stokes and plate solves,
//!   passing the plate velocity to the fluid as Dirichlet data and the fluid
//!   pressure back to the plate as a load;
//! * [`mixed::solve_monolithic`]: one saddle-point system with Lagrange
//!   multipliers for incompressibility, the velocity/plate matching and the
//!   plate mean constraint.
//!
//! [`verification`] carries a manufactured solution with error norms and
//! convergence studies, and [`mixed::estimate_infsup`] estimates the discrete
//! inf-sup constant of the constraint form.

pub mod coupling;
pub mod discretization;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod loads;
pub mod mesh;
pub mod mixed;
pub mod plate;
pub mod stokes;
pub mod verification;

pub use discretization::Discretization;
pub use error::{Error, Result};
pub use loads::LoadSet;

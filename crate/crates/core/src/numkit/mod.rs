//! Dense numerical kernels: vectors and matrices, a two-phase simplex LP solver, active-set
//! nonnegative least squares, Dykstra projection onto halfspace intersections and a Jacobi
//! eigenvalue routine for singular values.

mod dykstra;
mod eigen;
mod linalg;
mod lp;
mod nnls;
mod tol;

pub use dykstra::{dykstra_project, Halfspace, Projection};
pub use eigen::{operator_norm, singular_values, smallest_singular_value, symmetric_eigenvalues};
pub use linalg::{least_squares, vec_ops, Matrix};
pub use lp::{solve_lp, LpConstraint, LpProblem, LpSolution, LpStatus, Sense};
pub use nnls::{nnls, simplex_nnls, NnlsResult};
pub use tol::Tolerances;

//! Linear-algebra kernels used by the solvers.

mod condition;
mod dense;
mod sparse;
mod tridiag;

pub use condition::{condition_estimate, inverse_norm1_estimate};
pub use dense::{solve_dense_lu, DenseMat, LuFactor, PIVOT_FLOOR};
pub use sparse::{solve_spd, CgReport, Preconditioner, SparseSym, DEFAULT_TOL};
pub use tridiag::{solve_tridiag, TriDiag};

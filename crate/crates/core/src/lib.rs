//! Preconditioned penalized least squares.
//!
//! * [`linalg`]: SVD, numerical rank, Gram pseudoinverse.
//! * [`penalties`]: lasso, elastic net, SCAD and MC+ with their univariate
//!   thresholding maps.
//! * [`estimators`]: OLS, ridge, Z statistics and marginal p-values.
//! * [`preconditioners`]: the Puffer transform, its column-scaled variant and
//!   the ridge-type `F_τ` family, plus the row-space map `𝒫_τ`.
//! * [`solver`]: coordinate descent for `½‖y − Xb‖² + λ Σ pen(b_j)`.
//! * [`verify`]: randomized certificates for the equivalences between the
//!   preconditioned fits and the classical estimators.

pub mod error;
pub mod estimators;
pub mod linalg;
pub mod penalties;
pub mod preconditioners;
pub mod solver;
pub mod verify;

pub use error::{PufferError, Result};
pub use linalg::{Matrix, Vector};
pub use penalties::{PenaltyKind, PenaltySpec};
pub use preconditioners::{PreconditionedPair, Transform};
pub use solver::{FitResult, SolverConfig};

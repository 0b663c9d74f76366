//! Low-rank Tucker tensor completion and decomposition.
//!
//! Third-order dense tensors are stored column-major (first index fastest) and
//! indexed from 1 in the public API. The solvers fit a Tucker model
//! `G x1 U x2 V x3 W` with column-orthonormal factors, either to a sparse set
//! of observed entries or to a full tensor.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod datagen;
pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod solvers;
pub mod tensor;

pub use error::{Error, Result};
pub use linalg::{Matrix, ModeWeights};
pub use solvers::{Init, SolverConfig, SolverResult, TuckerModel};
pub use tensor::{DenseTensor3, Dims3, Entry, ObservationSet};

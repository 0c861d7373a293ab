//! Dense complex matrix and tensor primitives: Kronecker products, Schmidt
//! decomposition, Hermitian eigensolving, and conditional-state extraction.
//!
//! All operations here are pure functions on immutable inputs and are safe
//! to call concurrently.

mod conditional;
mod eigen;
pub(crate) mod matrix;
mod schmidt;

pub use conditional::{conditional_state, project_party};
pub use eigen::{hermitian_eigensystem, lanczos_max, Eigensystem, DENSE_EIG_CAP};
pub use matrix::{kron, ComplexMatrix};
pub use schmidt::{complete_basis, schmidt_decompose, SchmidtForm, SCHMIDT_ZERO_CUTOFF};

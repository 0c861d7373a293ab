//! Construction, analysis, and Monte-Carlo simulation of quantum state
//! verification (QSV) protocols built from adaptive local projective
//! measurements.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`states`] constructs target states (GHZ, Dicke, W, Haar-random) and
//!   handles their JSON persistence.
//! * [`bases`] generates local measurement bases: generalized Pauli
//!   eigenbases, MUB sets, and Bloch-vector designs for qubits.
//! * [`protocols`] builds the test sets of each verification protocol as
//!   adaptive branch structures that can be densified to projectors on
//!   demand.
//! * [`analysis`] assembles verification operators, computes spectral gaps,
//!   optimizes test probabilities, and evaluates sample-complexity bounds.
//! * [`simulator`] runs Monte-Carlo verification experiments against
//!   prepared sources.
//!
//! All random sampling uses `ChaCha12` streams derived from `(seed, index)`
//! pairs, so sweeps are reproducible across machines and across the
//! sequential/parallel execution modes (see the `parallel` feature).

pub mod analysis;
pub mod bases;
pub mod linalg;
pub mod parallel;
pub mod protocols;
pub mod simulator;
pub mod states;

pub use num_complex::Complex64 as C64;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum QsvError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state is not normalized: |norm - 1| = {0:.3e}")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian: max|H - H^dag| = {0:.3e}")]
    NotHermitian(f64),
    #[error("matrix dimension {0} exceeds the dense eigensolver cap {1}")]
    DimensionCap(usize, usize),
    #[error("outcome index {index} out of range for dimension {dim}")]
    OutcomeOutOfRange { index: usize, dim: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("probabilities do not lie on the simplex: {0}")]
    SimplexViolation(String),
    #[error("target state is not fixed by the verification operator (residual {0:.3e})")]
    TargetNotFixed(f64),
    #[error("malformed state file: {0}")]
    MalformedState(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QsvError>;

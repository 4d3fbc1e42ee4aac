//! Gaussian states under finite squeezing.
//!
//! States are first and second moments over `(q_1..q_n, p_1..p_n)` with the
//! vacuum at covariance `I / 2`. A [`SymplecticOp`] is the Heisenberg action
//! `U† v U = L v + c`, so it maps moments as `μ → L μ + c`, `Σ → L Σ Lᵀ`.

mod distortion;
mod homodyne;
mod state;
mod symplectic;

pub use distortion::{
    average_teleport_chain, average_teleport_chain_output_frame, conditional_teleport_hop,
    hop_noise, variance_vs_hops, write_variance_csv, HopVariance,
};
pub use homodyne::{homodyne, homodyne_basis_of_shear, HomodyneResult};
pub use state::{canonical_cluster, GaussianState, StateJson};
pub use symplectic::{generation_matrix, omega, GaussianGate, SymplecticOp};

use thiserror::Error;

/// Absolute tolerance for invariant checks.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaussianError {
    #[error("a Gaussian state needs at least one mode")]
    NoModes,
    #[error("mode {0} is not live")]
    ModeNotLive(usize),
    #[error("gate targets mode {0} twice")]
    OverlappingModes(usize),
    #[error("squeeze factor must be positive, got {0}")]
    NonPositiveSqueeze(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("duplicate mode label {0}")]
    DuplicateLabel(usize),
    #[error("state and nullifier set address different modes")]
    LabelMismatch,
    #[error("covariance is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),
    #[error("covariance violates the uncertainty relation (eigenvalue {0:e})")]
    Uncertainty(f64),
    #[error("operation is not symplectic (deviation {0:e})")]
    NotSymplectic(f64),
    #[error("covariance is singular along {direction:?}")]
    SingularCovariance { direction: Vec<f64> },
    #[error("measured quadrature has variance {0:e}")]
    DegenerateMeasurement(f64),
}

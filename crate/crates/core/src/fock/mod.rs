//! Truncated number-basis simulation of the non-Gaussian elements.
//!
//! Single-mode unitaries are built by exponentiating the generator on
//! `dim + guard` levels and keeping the leading `dim × dim` block, which keeps
//! the truncation error out of the first `dim − guard` levels. Truncation loss
//! is tracked as `norm_leak` and compared with a configurable threshold.

mod circuits;
mod grid;
mod ops;
mod state;

pub use circuits::{
    cubic_correction, gamma_of_n, matched_gkp_squeezing, run_circuit_cluster, run_circuit_gkp,
    CircuitOutput,
};
pub use grid::{
    best_target_overlap, cubic_fn, cubic_target, cubic_target_shifted, hermite_series,
    sandwich_discrepancy, squeeze_fn, GridSpec, GridWavefunction, TargetOverlap,
};
pub use ops::{
    annihilation, hermitian_exp, number_op, position_eigenbasis, quadrature_ops,
    single_mode_unitary, unitarity_defect, CMatrix, SingleModeGenerator,
};
pub use state::{squeezed_vacuum, CountOutcome, CountResult, FockGate, FockJson, FockState};

use thiserror::Error;

/// Default per-mode truncation for two-mode circuits.
pub const DEFAULT_DIM: usize = 40;
/// Levels above `dim` used while exponentiating generators.
pub const DEFAULT_GUARD: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockConfig {
    pub guard: usize,
    /// Largest tolerated truncation loss `1 − ⟨ψ|ψ⟩` (accumulated).
    pub leak_threshold: f64,
}

impl Default for FockConfig {
    fn default() -> Self {
        FockConfig {
            guard: DEFAULT_GUARD,
            leak_threshold: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("each mode needs at least two levels")]
    DimensionTooSmall,
    #[error("mode {0} is not live")]
    ModeNotLive(usize),
    #[error("gate targets mode {0} twice")]
    OverlappingModes(usize),
    #[error("duplicate mode label {0}")]
    DuplicateLabel(usize),
    #[error("squeeze factor must be positive, got {0}")]
    NonPositiveSqueeze(f64),
    #[error("cubic strength must be positive, got {0}")]
    NonPositiveStrength(f64),
    #[error("truncation leak {leak:e} exceeds threshold {threshold:e}")]
    Leak { leak: f64, threshold: f64 },
    #[error("photon number {0} has zero probability")]
    ZeroProbability(usize),
    #[error("photon number {0} is outside the truncation {1}")]
    OutcomeOutOfRange(usize, usize),
    #[error("grid too coarse for the cubic phase (step {0:.3} rad)")]
    GridTooCoarse(f64),
    #[error("overlap optimisation failed: {0}")]
    Optimizer(String),
}

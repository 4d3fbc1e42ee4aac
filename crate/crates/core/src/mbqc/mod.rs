//! Measurement-based computation on cluster states.
//!
//! A circuit of diagonal gates `exp(i s q^k / k)`, Fouriers and CZs is laid
//! out as a brickwork graph with one wire per circuit line. Measuring a wire
//! node in the basis `p̂ + f′(q̂)` teleports its state one node along as
//! `X(m) F e^{if(q)}`. The `X(m)` and `F` byproducts are tracked per wire and
//! never applied.

mod byproduct;
mod cubic;
mod program;
mod run;

pub use crate::gaussian::homodyne_basis_of_shear;
pub use byproduct::{ByproductRecord, Correction, WireFrame, WireRecord};
pub use cubic::{
    check_cubic_schedule, fit_phase_cubic, run_cubic_gate, squeeze_circuit, CubicGateOutput,
    CubicOptions, CubicResource, CubicStage, FockCircuitResource, PreparedResource, ResourceWave,
    TargetResource, CUBIC_SCHEDULE,
};
pub use program::{
    compile_brickwork, AdaptRule, Brickwork, Circuit, CircuitGate, Inputs, MeasurementProgram,
    Poly, ProgramStep,
};
pub use run::{
    attach_input, circuit_exact_gates, circuit_gaussian_gates, execute_program, ideal_nullifiers,
    run_program, write_outcome_csv, Attached, Backend, BackendState, OutcomeEntry, ProgramRun,
    RunOptions,
};

use thiserror::Error;

use crate::fock::FockError;
use crate::gaussian::GaussianError;
use crate::nullifier::NullifierError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MbqcError {
    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("step {step} on mode {mode} is cubic; the Gaussian and nullifier backends cannot represent it, run it through the cubic gate pipeline with a Fock delegate")]
    NonGaussianStep { step: usize, mode: usize },
    #[error("mode {0} is neither measured nor an output")]
    UnmeasuredMode(usize),
    #[error("expected {expected} forced outcomes, got {got}")]
    OutcomeCount { expected: usize, got: usize },
    #[error("cluster and input live on different backends")]
    BackendMismatch,
    #[error("program order: {0}")]
    ProgramOrder(String),
    #[error("wire frame has Fourier power {0}; the gate needs an even power")]
    FrameNotDiagonal(u8),
    #[error("value {0} is not finite")]
    NotFinite(f64),
    #[error("{0}")]
    Ordering(String),
    #[error(transparent)]
    Nullifier(#[from] NullifierError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Fock(#[from] FockError),
}

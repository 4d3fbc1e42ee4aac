//! The two photon-counting circuits that prepare approximate cubic phase
//! states, and the squeezing correction that turns `e^{iγ(n)q³}` into
//! `e^{iaq³}`.
//!
//! * GKP-style: `S(1/s)|0⟩ ⊗ S(s)|0⟩`, a 50:50 beamsplitter, `Z(r)` on mode 1,
//!   then photon counting on mode 1.
//! * Cluster-style: two momentum-squeezed modes `S(s)|0⟩` joined by CZ,
//!   `X(r)` on mode 1, then photon counting on mode 1.
//!
//! The unmeasured mode 2 is returned. Both circuits are meant for
//! `r ≫ s ≫ 1`; outside that regime they still run but report a warning.

use rand::Rng;
use std::f64::consts::FRAC_PI_4;

use super::ops::SingleModeGenerator;
use super::state::{squeezed_vacuum, CountOutcome, FockGate, FockState};
use super::{FockConfig, FockError};

/// `γ(n) = 1 / (6 √(2n + 1))`.
pub fn gamma_of_n(n: usize) -> f64 {
    1.0 / (6.0 * ((2 * n + 1) as f64).sqrt())
}

/// `t(n) = (a / γ(n))^{1/3}`, so that `S†(t) e^{iγ(n) q³} S(t) = e^{i a q³}`.
///
/// Only `a > 0` is accepted; a negative strength is obtained by conjugating
/// with the reflection `F²`, which maps `q³ → −q³`.
pub fn cubic_correction(a: f64, n: usize) -> Result<f64, FockError> {
    if !(a > 0.0) {
        return Err(FockError::NonPositiveStrength(a));
    }
    Ok((a / gamma_of_n(n)).cbrt())
}

/// Squeezing for the GKP-style circuit whose two-mode state carries the same
/// entanglement as the two-mode cluster of accuracy `s`:
/// `s_g² + s_g⁻² = 2√(1 + s⁴)`.
pub fn matched_gkp_squeezing(s: f64) -> f64 {
    let s2 = s * s;
    (s2 + (1.0 + s2 * s2).sqrt()).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitOutput {
    pub n: usize,
    pub probability: f64,
    /// Count distribution on mode 1 before the measurement.
    pub distribution: Vec<f64>,
    /// Normalised conditional state of mode 2.
    pub state: FockState,
    pub warnings: Vec<String>,
}

fn regime_warnings(s: f64, r: f64) -> Vec<String> {
    let mut w = Vec::new();
    if s <= 1.0 {
        w.push(format!("squeezing s = {s} is not above 1"));
    }
    if r <= s {
        w.push(format!("displacement r = {r} is not larger than s = {s}"));
    }
    w
}

fn finish<R: Rng + ?Sized>(
    st: FockState,
    outcome: CountOutcome<'_, R>,
    warnings: Vec<String>,
) -> Result<CircuitOutput, FockError> {
    let distribution = st.count_distribution(1)?;
    let res = st.photon_count(1, outcome)?;
    Ok(CircuitOutput {
        n: res.n,
        probability: res.probability,
        distribution,
        state: res.state,
        warnings,
    })
}

fn pair(a: FockState, b: FockState) -> Result<FockState, FockError> {
    a.tensor(&FockState {
        labels: vec![2],
        ..b
    })
}

pub fn run_circuit_gkp<R: Rng + ?Sized>(
    s: f64,
    r: f64,
    dim: usize,
    outcome: CountOutcome<'_, R>,
    config: &FockConfig,
) -> Result<CircuitOutput, FockError> {
    let st = pair(
        squeezed_vacuum(1.0 / s, dim, config)?,
        squeezed_vacuum(s, dim, config)?,
    )?
    .apply_all(
        &[
            FockGate::Beamsplitter {
                a: 1,
                b: 2,
                theta: FRAC_PI_4,
            },
            FockGate::Single {
                mode: 1,
                gen: SingleModeGenerator::DisplaceZ(r),
            },
        ],
        config,
    )?;
    finish(st, outcome, regime_warnings(s, r))
}

pub fn run_circuit_cluster<R: Rng + ?Sized>(
    s: f64,
    r: f64,
    dim: usize,
    outcome: CountOutcome<'_, R>,
    config: &FockConfig,
) -> Result<CircuitOutput, FockError> {
    let st = pair(
        squeezed_vacuum(s, dim, config)?,
        squeezed_vacuum(s, dim, config)?,
    )?
    .apply_all(
        &[
            FockGate::Cz { a: 1, b: 2 },
            FockGate::Single {
                mode: 1,
                gen: SingleModeGenerator::DisplaceX(r),
            },
        ],
        config,
    )?;
    finish(st, outcome, regime_warnings(s, r))
}

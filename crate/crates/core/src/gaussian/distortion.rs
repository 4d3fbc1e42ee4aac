//! Finite-squeezing distortion of teleportation along a linear cluster.
//!
//! One hop teleports an input through a CZ bond to a momentum-squeezed mode
//! of accuracy `s` and measures the input's momentum with outcome `m`. The
//! output is `X(m) F ψ'`, where `ψ'` is the input after
//!
//! 1. adding variance `1/(2s²)` to `q`, and
//! 2. multiplying the Wigner function by the envelope `exp(−(p − m)²/s²)`.
//!
//! Averaged over outcomes (with `X(m)` undone) the envelope drops out and each
//! hop only adds `1/(2s²)` to one quadrature. Because of the Fourier gate per
//! hop, that quadrature alternates between `q` and `p` in the input frame.

use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use super::state::GaussianState;
use super::symplectic::GaussianGate;
use super::GaussianError;

/// Variance added per hop: `1/(2s²)`.
pub fn hop_noise(s: f64) -> f64 {
    1.0 / (2.0 * s * s)
}

fn single_mode(st: &GaussianState) -> Result<usize, GaussianError> {
    if st.modes() != 1 {
        return Err(GaussianError::DimensionMismatch {
            expected: 2,
            got: 2 * st.modes(),
        });
    }
    Ok(st.labels[0])
}

/// Outcome-averaged state after `hops` hops, expressed in the input frame
/// (every byproduct including the Fourier gates undone).
pub fn average_teleport_chain(
    input: &GaussianState,
    s: f64,
    hops: usize,
) -> Result<GaussianState, GaussianError> {
    single_mode(input)?;
    if !(s > 0.0) {
        return Err(GaussianError::NonPositiveSqueeze(s));
    }
    let nu = hop_noise(s);
    let mut out = input.clone();
    out.cov[(0, 0)] += nu * hops.div_ceil(2) as f64;
    out.cov[(1, 1)] += nu * (hops / 2) as f64;
    Ok(out)
}

/// Same as [`average_teleport_chain`] but leaving the `F^hops` from the
/// chain in place, i.e. the state physically present on the last mode once
/// the outcome-dependent displacements are undone.
pub fn average_teleport_chain_output_frame(
    input: &GaussianState,
    s: f64,
    hops: usize,
) -> Result<GaussianState, GaussianError> {
    let label = single_mode(input)?;
    let mut st = average_teleport_chain(input, s, hops)?;
    for _ in 0..hops % 4 {
        st = st.apply_gate(&GaussianGate::fourier(label))?;
    }
    Ok(st)
}

/// Single-shot conditional map of one hop for outcome `m`:
/// returns `X(m) F ψ'` with `ψ'` as in the module docs.
pub fn conditional_teleport_hop(
    input: &GaussianState,
    s: f64,
    m: f64,
) -> Result<GaussianState, GaussianError> {
    let label = single_mode(input)?;
    if !(s > 0.0) {
        return Err(GaussianError::NonPositiveSqueeze(s));
    }
    let mut cov = input.cov.clone();
    cov[(0, 0)] += hop_noise(s);
    // envelope exp(-(p - m)²/s²) is a Gaussian factor in p with variance s²/2
    let env_var = s * s / 2.0;
    let info = cov
        .clone()
        .try_inverse()
        .ok_or(GaussianError::SingularCovariance {
            direction: vec![f64::NAN; 2],
        })?;
    let mut post_info = info.clone();
    post_info[(1, 1)] += 1.0 / env_var;
    let post_cov = post_info
        .try_inverse()
        .ok_or(GaussianError::SingularCovariance {
            direction: vec![f64::NAN; 2],
        })?;
    let eta = &info * &input.mean + DVector::from_vec(vec![0.0, m / env_var]);
    let post_mean = &post_cov * eta;
    let post_cov = (&post_cov + post_cov.transpose()) * 0.5;
    let shaped = GaussianState {
        mean: post_mean,
        cov: post_cov,
        labels: input.labels.clone(),
    };
    shaped.apply_gates(&[
        GaussianGate::fourier(label),
        GaussianGate::X { mode: label, s: m },
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopVariance {
    pub hops: usize,
    pub var_q: f64,
    pub var_p: f64,
    pub added_q: f64,
    pub added_p: f64,
}

/// Input-frame variances for `0..=max_hops` hops.
pub fn variance_vs_hops(
    input: &GaussianState,
    s: f64,
    max_hops: usize,
) -> Result<Vec<HopVariance>, GaussianError> {
    (0..=max_hops)
        .map(|h| {
            let st = average_teleport_chain(input, s, h)?;
            Ok(HopVariance {
                hops: h,
                var_q: st.cov[(0, 0)],
                var_p: st.cov[(1, 1)],
                added_q: st.cov[(0, 0)] - input.cov[(0, 0)],
                added_p: st.cov[(1, 1)] - input.cov[(1, 1)],
            })
        })
        .collect()
}

pub fn write_variance_csv<W: Write>(rows: &[HopVariance], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

//! Homodyne detection on Gaussian states.
//!
//! For a Gaussian with moments `(μ, Σ)` and a measured quadrature `x_k`, the
//! remaining quadratures `y` conditioned on `x_k = x` are Gaussian with
//!
//! ```text
//! μ_y' = μ_y + Σ_yk (x − μ_k) / Σ_kk
//! Σ_yy' = Σ_yy − Σ_yk Σ_ky / Σ_kk
//! ```
//!
//! which is the Schur complement of the rank-1 projection onto `x_k`. The
//! conjugate quadrature of the measured mode is then traced out together with
//! it. The covariance update does not depend on `x`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::state::GaussianState;
use super::symplectic::GaussianGate;
use super::GaussianError;

#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneResult {
    pub outcome: f64,
    /// Conditional state of the unmeasured modes.
    pub state: GaussianState,
    /// Marginal probability density of `outcome`.
    pub density: f64,
}

/// Measures `sin θ q + cos θ p` on mode `label`.
///
/// `θ = 0` is a momentum measurement and `θ = π/2` a position measurement.
/// The outcome is drawn from the marginal normal distribution unless
/// `forced` is given.
pub fn homodyne<R: Rng + ?Sized>(
    st: &GaussianState,
    label: usize,
    theta: f64,
    forced: Option<f64>,
    rng: &mut R,
) -> Result<HomodyneResult, GaussianError> {
    let rotated = if theta == 0.0 {
        st.clone()
    } else {
        st.apply_gate(&GaussianGate::Rotate { mode: label, theta })?
    };
    let n = rotated.modes();
    let pos = rotated.position(label)?;
    let k = n + pos;
    let var = rotated.cov[(k, k)];
    if !(var > 0.0) {
        return Err(GaussianError::DegenerateMeasurement(var));
    }
    let mu = rotated.mean[k];
    let outcome = match forced {
        Some(x) => x,
        None => {
            let dist = Normal::new(mu, var.sqrt())
                .map_err(|_| GaussianError::DegenerateMeasurement(var))?;
            dist.sample(rng)
        }
    };
    let density =
        (-(outcome - mu).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();

    let keep: Vec<usize> = (0..2 * n).filter(|&i| i != pos && i != k).collect();
    let gain = DVector::from_iterator(keep.len(), keep.iter().map(|&i| rotated.cov[(i, k)] / var));
    let mean = DVector::from_iterator(keep.len(), keep.iter().map(|&i| rotated.mean[i]))
        + &gain * (outcome - mu);
    let cov = DMatrix::from_fn(keep.len(), keep.len(), |r, c| {
        rotated.cov[(keep[r], keep[c])] - gain[r] * rotated.cov[(k, keep[c])]
    });
    let cov = (&cov + cov.transpose()) * 0.5;
    let mut labels = rotated.labels.clone();
    labels.remove(pos);
    Ok(HomodyneResult {
        outcome,
        state: GaussianState { mean, cov, labels },
        density,
    })
}

/// Angle and outcome scale for measuring `p + s q` with a rotated homodyne:
/// `p + s q = r (sin θ q + cos θ p)` with `θ = atan s`, `r = √(1 + s²)`.
pub fn homodyne_basis_of_shear(s: f64) -> (f64, f64) {
    (s.atan(), (1.0 + s * s).sqrt())
}

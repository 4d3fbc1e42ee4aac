use argmin::core::{CostFunction, Error as ArgminError, Executor};
use argmin::solver::neldermead::NelderMead;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FockError;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Uniform position grid `[q_min, q_max]` with `points` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            q_min: -10.0,
            q_max: 10.0,
            points: 2048,
        }
    }
}

impl GridSpec {
    pub fn spacing(&self) -> f64 {
        (self.q_max - self.q_min) / (self.points - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points)
            .map(|i| self.q_min + i as f64 * h)
            .collect()
    }

    pub fn half_width(&self) -> f64 {
        self.q_min.abs().max(self.q_max.abs())
    }
}

/// Complex amplitudes sampled on a uniform position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub spacing: f64,
}

impl GridWavefunction {
    pub fn from_fn(spec: &GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        let grid = spec.points();
        let values = grid.iter().map(|&x| f(x)).collect();
        GridWavefunction {
            grid,
            values,
            spacing: spec.spacing(),
        }
    }

    /// `Σ c_n ψ_n(x)` with `ψ_n` the normalised Hermite functions.
    pub fn from_fock(coeffs: &[Complex64], spec: &GridSpec) -> Self {
        Self::from_fn(spec, |x| hermite_series(coeffs, x))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spacing
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm_sqr().sqrt();
        self.values.iter_mut().for_each(|v| *v /= n);
        self
    }

    pub fn inner(&self, other: &GridWavefunction) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.spacing
    }

    /// `|⟨self|other⟩|` for normalised copies.
    pub fn overlap(&self, other: &GridWavefunction) -> f64 {
        self.inner(other).norm() / (self.norm_sqr() * other.norm_sqr()).sqrt()
    }
}

/// `Σ c_n ψ_n(x)` at one point, by the stable Hermite-function recursion.
pub fn hermite_series(coeffs: &[Complex64], x: f64) -> Complex64 {
    let mut h_prev = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
    let mut acc = coeffs.first().copied().unwrap_or_default() * h_prev;
    if coeffs.len() < 2 {
        return acc;
    }
    let mut h = std::f64::consts::SQRT_2 * x * h_prev;
    acc += coeffs[1] * h;
    for (k, c) in coeffs.iter().enumerate().skip(2) {
        let kf = k as f64;
        let next = (2.0 / kf).sqrt() * x * h - ((kf - 1.0) / kf).sqrt() * h_prev;
        h_prev = h;
        h = next;
        acc += c * h;
    }
    acc
}

/// `ψ(q) ∝ exp(iγq³) exp(−q²/(2 s_env²))`, normalised on the grid.
///
/// Fails unless `|γ| q_max² h < π/4` for grid spacing `h`.
pub fn cubic_target(
    gamma: f64,
    s_env: f64,
    spec: &GridSpec,
) -> Result<GridWavefunction, FockError> {
    cubic_target_shifted(gamma, s_env, spec, 0.0, 0.0)
}

/// The target displaced to `q → q − x0` and boosted by `exp(i p0 q)`.
pub fn cubic_target_shifted(
    gamma: f64,
    s_env: f64,
    spec: &GridSpec,
    x0: f64,
    p0: f64,
) -> Result<GridWavefunction, FockError> {
    if !(s_env > 0.0) {
        return Err(FockError::NonPositiveSqueeze(s_env));
    }
    let q_max = spec.half_width();
    let step = gamma.abs() * q_max * q_max * spec.spacing();
    if step >= std::f64::consts::FRAC_PI_4 {
        return Err(FockError::GridTooCoarse(step));
    }
    Ok(GridWavefunction::from_fn(spec, |x| {
        let y = x - x0;
        (I * (gamma * y.powi(3) + p0 * x) - y * y / (2.0 * s_env * s_env)).exp()
    })
    .normalized())
}

/// Best overlap with the cubic target over phase-space shifts `(x0, p0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TargetOverlap {
    pub overlap: f64,
    pub x0: f64,
    pub p0: f64,
}

struct ShiftCost<'a> {
    psi: &'a GridWavefunction,
    gamma: f64,
    s_env: f64,
    spec: GridSpec,
}

impl CostFunction for ShiftCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> Result<f64, ArgminError> {
        let t = cubic_target_shifted(self.gamma, self.s_env, &self.spec, p[0], p[1])?;
        Ok(-t.overlap(self.psi))
    }
}

/// Maximises `|⟨T_{x0,p0}|ψ⟩|` over shifts in `[-range, range]²`: coarse scan
/// on a 13×13 lattice, then Nelder–Mead from the best point.
pub fn best_target_overlap(
    psi: &GridWavefunction,
    gamma: f64,
    s_env: f64,
    spec: &GridSpec,
    range: f64,
) -> Result<TargetOverlap, FockError> {
    let cost = ShiftCost {
        psi,
        gamma,
        s_env,
        spec: *spec,
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..13 {
        for j in 0..13 {
            let x0 = -range + 2.0 * range * i as f64 / 12.0;
            let p0 = -range + 2.0 * range * j as f64 / 12.0;
            let c = cost
                .cost(&vec![x0, p0])
                .map_err(|e| FockError::Optimizer(e.to_string()))?;
            if c < best.0 {
                best = (c, x0, p0);
            }
        }
    }
    let step = range / 12.0;
    let simplex = vec![
        vec![best.1, best.2],
        vec![best.1 + step, best.2],
        vec![best.1, best.2 + step],
    ];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-12)
        .map_err(|e| FockError::Optimizer(e.to_string()))?;
    let res = Executor::new(cost, solver)
        .configure(|c| c.max_iters(400))
        .run()
        .map_err(|e| FockError::Optimizer(e.to_string()))?;
    let p = res.state.best_param.unwrap_or(vec![best.1, best.2]);
    Ok(TargetOverlap {
        overlap: -res.state.best_cost.min(best.0),
        x0: p[0],
        p0: p[1],
    })
}

/// `S(t)`: `ψ(x) → t^{-1/2} ψ(x / t)` (position stretched by `t`).
pub fn squeeze_fn(t: f64, f: impl Fn(f64) -> Complex64) -> impl Fn(f64) -> Complex64 {
    move |x| f(x / t) / t.sqrt()
}

/// `exp(iγ q³)` applied to a position wavefunction.
pub fn cubic_fn(gamma: f64, f: impl Fn(f64) -> Complex64) -> impl Fn(f64) -> Complex64 {
    move |x| (I * gamma * x.powi(3)).exp() * f(x)
}

/// Largest pointwise phase difference between `S†(t) e^{iγq³} S(t) ψ` and
/// `e^{iaq³} ψ` over grid points where `|ψ|` exceeds `floor`, together with
/// the largest relative modulus difference.
pub fn sandwich_discrepancy(
    gamma: f64,
    t: f64,
    a: f64,
    psi: impl Fn(f64) -> Complex64 + Copy,
    spec: &GridSpec,
    floor: f64,
) -> (f64, f64) {
    let lhs = squeeze_fn(1.0 / t, cubic_fn(gamma, squeeze_fn(t, psi)));
    let rhs = cubic_fn(a, psi);
    let mut phase = 0.0f64;
    let mut modulus = 0.0f64;
    for x in spec.points() {
        let (l, r) = (lhs(x), rhs(x));
        if r.norm() < floor {
            continue;
        }
        phase = phase.max((l / r).arg().abs());
        modulus = modulus.max(((l.norm() - r.norm()) / r.norm()).abs());
    }
    (phase, modulus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::state::squeezed_vacuum;
    use crate::fock::FockConfig;

    #[test]
    fn hermite_functions_are_orthonormal() {
        let spec = GridSpec::default();
        for n in [0, 1, 5, 20] {
            let mut c = vec![Complex64::from(0.0); 25];
            c[n] = Complex64::from(1.0);
            let w = GridWavefunction::from_fock(&c, &spec);
            assert!((w.norm_sqr() - 1.0).abs() < 1e-10, "n={n}");
            let mut d = vec![Complex64::from(0.0); 25];
            d[n + 2] = Complex64::from(1.0);
            let v = GridWavefunction::from_fock(&d, &spec);
            assert!(w.inner(&v).norm() < 1e-10);
        }
    }

    #[test]
    fn gaussian_target_matches_squeezed_vacuum() {
        let spec = GridSpec::default();
        let s = 1.8;
        let t = cubic_target(0.0, s, &spec).unwrap();
        let sv = squeezed_vacuum(s, 60, &FockConfig::default()).unwrap();
        let w = GridWavefunction::from_fock(&sv.amplitudes, &spec);
        assert!(t.overlap(&w) >= 0.999);
        for i in 0..spec.points / 2 {
            let j = spec.points - 1 - i;
            assert!((t.values[i].norm() - t.values[j].norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_target_modulus_is_symmetric() {
        let spec = GridSpec::default();
        let t = cubic_target(1.0 / 6.0, 2.0, &spec).unwrap();
        for i in 0..spec.points / 2 {
            let j = spec.points - 1 - i;
            assert!((t.values[i].norm() - t.values[j].norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn aliasing_guard() {
        let coarse = GridSpec {
            points: 64,
            ..GridSpec::default()
        };
        assert!(matches!(
            cubic_target(1.0, 2.0, &coarse),
            Err(FockError::GridTooCoarse(_))
        ));
    }

    #[test]
    fn shift_search_recovers_known_shift() {
        let spec = GridSpec::default();
        let psi = cubic_target_shifted(0.1, 2.0, &spec, 0.7, -1.1).unwrap();
        let best = best_target_overlap(&psi, 0.1, 2.0, &spec, 3.0).unwrap();
        assert!(best.overlap > 1.0 - 1e-9);
        assert!((best.x0 - 0.7).abs() < 1e-4 && (best.p0 + 1.1).abs() < 1e-4);
    }

    #[test]
    fn sandwich_identity_on_grid() {
        let gamma: f64 = 1.0 / 18.0;
        let a: f64 = 0.2;
        let t = (a / gamma).cbrt();
        let psi = |x: f64| (-(x - 0.4).powi(2) / 3.0 + I * 0.3 * x).exp();
        let (phase, modulus) = sandwich_discrepancy(gamma, t, a, psi, &GridSpec::default(), 1e-12);
        assert!(phase < 1e-6 && modulus < 1e-9);
        let (bad, _) = sandwich_discrepancy(gamma, 1.0, a, psi, &GridSpec::default(), 1e-12);
        assert!(bad > 0.1);
    }
}

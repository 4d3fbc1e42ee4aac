use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::RngCore;

use super::program::CircuitGate;
use super::MbqcError;
use crate::fock::{
    cubic_correction, gamma_of_n, hermite_series, run_circuit_cluster, CountOutcome, FockConfig,
    GridSpec, GridWavefunction,
};
use crate::gaussian::GaussianGate;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Position wavefunction of a prepared cubic resource.
#[derive(Debug, Clone, PartialEq)]
pub enum ResourceWave {
    /// Fock amplitudes of the heralded mode.
    Fock(Vec<Complex64>),
    /// `e^{iγq³} e^{−q²/(2 s_env²)}`, normalised.
    Target { gamma: f64, s_env: f64 },
}

impl ResourceWave {
    pub fn eval(&self, q: f64) -> Complex64 {
        match *self {
            ResourceWave::Fock(ref c) => hermite_series(c, q),
            ResourceWave::Target { gamma, s_env } => {
                let norm = (std::f64::consts::PI * s_env * s_env).powf(-0.25);
                Complex64::new(-q * q / (2.0 * s_env * s_env), gamma * q.powi(3)).exp() * norm
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedResource {
    pub n: usize,
    pub gamma: f64,
    pub probability: f64,
    pub wave: ResourceWave,
    pub warnings: Vec<String>,
}

/// Source of heralded cubic phase states `≈ e^{iγ(n)q³}|0⟩_p`.
pub trait CubicResource {
    fn prepare(
        &self,
        count: Option<usize>,
        rng: &mut dyn RngCore,
    ) -> Result<PreparedResource, MbqcError>;
}

/// Photon-counting cluster circuit simulated in the truncated Fock basis.
///
/// With `X(r)`, `r > 0`, the circuit heralds `≈ e^{−iγ(n)q³}|0⟩_p`; the
/// reflection `F²` is applied to restore the sign.
#[derive(Debug, Clone, PartialEq)]
pub struct FockCircuitResource {
    pub s: f64,
    pub r: f64,
    pub dim: usize,
    pub config: FockConfig,
}

impl CubicResource for FockCircuitResource {
    fn prepare(
        &self,
        count: Option<usize>,
        rng: &mut dyn RngCore,
    ) -> Result<PreparedResource, MbqcError> {
        let outcome = match count {
            Some(n) => CountOutcome::Forced(n),
            None => CountOutcome::Sample(rng),
        };
        let out = run_circuit_cluster(self.s, self.r, self.dim, outcome, &self.config)?;
        Ok(PreparedResource {
            n: out.n,
            gamma: gamma_of_n(out.n),
            probability: out.probability,
            wave: ResourceWave::Fock(
                out.state
                    .normalized()
                    .reflected(out.state.labels[0])?
                    .amplitudes,
            ),
            warnings: out.warnings,
        })
    }
}

/// The ideal finite-envelope target; the count is taken as given (default 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetResource {
    pub s_env: f64,
}

impl CubicResource for TargetResource {
    fn prepare(
        &self,
        count: Option<usize>,
        _rng: &mut dyn RngCore,
    ) -> Result<PreparedResource, MbqcError> {
        let n = count.unwrap_or(0);
        let gamma = gamma_of_n(n);
        Ok(PreparedResource {
            n,
            gamma,
            probability: 1.0,
            wave: ResourceWave::Target {
                gamma,
                s_env: self.s_env,
            },
            warnings: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubicStage {
    /// Photon count on the resource circuit, fixing `γ(n)` and `t(n)`.
    Count,
    /// `F† S(t)` on the input.
    SqueezeIn,
    /// CZ onto the resource, then `p̂` on the input mode.
    Teleport,
    /// `S†(t)` on the output.
    SqueezeOut,
}

pub const CUBIC_SCHEDULE: [CubicStage; 4] = [
    CubicStage::Count,
    CubicStage::SqueezeIn,
    CubicStage::Teleport,
    CubicStage::SqueezeOut,
];

/// The squeezers depend on the count, so both must come after it.
pub fn check_cubic_schedule(stages: &[CubicStage]) -> Result<(), MbqcError> {
    let at = |s: CubicStage| {
        let hits: Vec<usize> = (0..stages.len()).filter(|&i| stages[i] == s).collect();
        match hits[..] {
            [i] => Ok(i),
            _ => Err(MbqcError::Ordering(format!(
                "{s:?} must appear exactly once"
            ))),
        }
    };
    let (c, i, t, o) = (
        at(CubicStage::Count)?,
        at(CubicStage::SqueezeIn)?,
        at(CubicStage::Teleport)?,
        at(CubicStage::SqueezeOut)?,
    );
    if stages.len() != 4 {
        return Err(MbqcError::Ordering("unknown extra stages".into()));
    }
    if i < c || o < c {
        return Err(MbqcError::Ordering(
            "squeezer scheduled before the photon count".into(),
        ));
    }
    if !(i < t && t < o) {
        return Err(MbqcError::Ordering(
            "squeezers must bracket the teleportation".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CubicOptions {
    pub count: Option<usize>,
    /// Homodyne result of the teleportation; sampled when `None`.
    pub homodyne: Option<f64>,
    pub spec: GridSpec,
    pub schedule: Vec<CubicStage>,
}

impl Default for CubicOptions {
    fn default() -> Self {
        CubicOptions {
            count: None,
            homodyne: None,
            spec: GridSpec::default(),
            schedule: CUBIC_SCHEDULE.to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CubicGateOutput {
    pub n: usize,
    pub gamma: f64,
    pub t: f64,
    pub m: f64,
    /// Normalised output on the grid.
    pub output: GridWavefunction,
    /// `output ∝ (∏ byproducts) e^{iaq³} input`, in application order.
    pub byproducts: Vec<GaussianGate>,
    /// Squeeze factors applied, in order; empty when `t = 1`.
    pub squeezers: Vec<f64>,
    /// Probability of the count times the density of `m`.
    pub probability: f64,
    pub warnings: Vec<String>,
}

/// `(1/√2π) Σ_w e^{i sign k w} f(w) h` at each `k`.
fn transform(ks: &[f64], ws: &[f64], f: &[Complex64], h: f64, sign: f64) -> Vec<Complex64> {
    ks.iter()
        .map(|&k| {
            ws.iter()
                .zip(f)
                .map(|(&w, &v)| Complex64::from_polar(1.0, sign * k * w) * v)
                .sum::<Complex64>()
                * (h * FRAC_1_SQRT_2PI)
        })
        .collect()
}

/// Applies `e^{iaq³}` to `input` by teleporting it through a heralded cubic
/// resource with squeezer corrections:
///
/// 1. count photons, giving `γ(n)` and `t = (a/γ)^{1/3}`;
/// 2. apply `F† S(t)` to the input;
/// 3. CZ onto the resource and read `p̂ = m` on the input mode, which leaves
///    `e^{iγq³} X(m) S(t) ψ`;
/// 4. apply `S†(t)`, giving `X(m/t) Z(3γtm²) Shear(6γt²m) e^{iaq³} ψ`.
///
/// Every integral is evaluated on the position grid of `options.spec`.
pub fn run_cubic_gate(
    input: &dyn Fn(f64) -> Complex64,
    a: f64,
    resource: &dyn CubicResource,
    options: &CubicOptions,
    rng: &mut dyn RngCore,
) -> Result<CubicGateOutput, MbqcError> {
    check_cubic_schedule(&options.schedule)?;
    let spec = options.spec;
    let grid = spec.points();
    let h = spec.spacing();

    let mut prepared = None;
    let mut t = 1.0;
    let mut squeezers = Vec::new();
    let mut moved: Vec<Complex64> = Vec::new();
    let mut m = 0.0;
    let mut density = 1.0;
    let mut output: Option<GridWavefunction> = None;
    let mut teleported: Option<Box<dyn Fn(f64) -> Complex64>> = None;

    for stage in &options.schedule {
        match stage {
            CubicStage::Count => {
                let res = resource.prepare(options.count, rng)?;
                t = cubic_correction(a, res.n)?;
                prepared = Some(res);
            }
            CubicStage::SqueezeIn => {
                if t != 1.0 {
                    squeezers.push(t);
                }
                let st: Vec<Complex64> = grid.iter().map(|&w| input(w / t) / t.sqrt()).collect();
                moved = transform(&grid, &grid, &st, h, -1.0);
            }
            CubicStage::Teleport => {
                let res = prepared.as_ref().expect("schedule checked");
                let st: Vec<Complex64> = grid.iter().map(|&w| input(w / t) / t.sqrt()).collect();
                m = match options.homodyne {
                    Some(m) => m,
                    None => {
                        let weights = |v: Vec<f64>| {
                            WeightedIndex::new(v)
                                .map_err(|e| MbqcError::InvalidProgram(e.to_string()))
                        };
                        let pv =
                            weights(grid.iter().map(|&v| res.wave.eval(v).norm_sqr()).collect())?;
                        let pw = weights(st.iter().map(|v| v.norm_sqr()).collect())?;
                        grid[pv.sample(rng)] - grid[pw.sample(rng)]
                    }
                };
                let wave = res.wave.clone();
                let chi = std::mem::take(&mut moved);
                let grid_c = grid.clone();
                let mm = m;
                teleported = Some(Box::new(move |v: f64| {
                    wave.eval(v) * transform(&[v - mm], &grid_c, &chi, h, 1.0)[0]
                }));
            }
            CubicStage::SqueezeOut => {
                if t != 1.0 {
                    squeezers.push(1.0 / t);
                }
                let f = teleported.take().expect("schedule checked");
                let raw = GridWavefunction::from_fn(&spec, |x| f(t * x) * t.sqrt());
                density = raw.norm_sqr();
                output = Some(raw.normalized());
            }
        }
    }
    let res = prepared.expect("schedule checked");
    let gamma = res.gamma;
    Ok(CubicGateOutput {
        n: res.n,
        gamma,
        t,
        m,
        output: output.expect("schedule checked"),
        byproducts: vec![
            GaussianGate::Shear {
                mode: 1,
                s: 6.0 * gamma * t * t * m,
            },
            GaussianGate::Z {
                mode: 1,
                s: 3.0 * gamma * t * m * m,
            },
            GaussianGate::X { mode: 1, s: m / t },
        ],
        squeezers,
        probability: res.probability * density,
        warnings: res.warnings,
    })
}

/// Least-squares cubic `c₀ + c₁x + c₂x² + c₃x³` through the unwrapped phase
/// of `out(x) / reference(x − shift)`, over the connected stretch around the
/// peak of `|out|` where both moduli exceed `floor` times their maxima.
pub fn fit_phase_cubic(
    out: &GridWavefunction,
    reference: &dyn Fn(f64) -> Complex64,
    shift: f64,
    floor: f64,
) -> Option<[f64; 4]> {
    let refs: Vec<Complex64> = out.grid.iter().map(|&x| reference(x - shift)).collect();
    let max_o = out.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let max_r = refs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let ok = |j: usize| out.values[j].norm() > floor * max_o && refs[j].norm() > floor * max_r;
    let peak = (0..out.grid.len())
        .max_by(|&i, &j| out.values[i].norm().total_cmp(&out.values[j].norm()))?;
    if !ok(peak) {
        return None;
    }
    let (mut lo, mut hi) = (peak, peak);
    while lo > 0 && ok(lo - 1) {
        lo -= 1;
    }
    while hi + 1 < out.grid.len() && ok(hi + 1) {
        hi += 1;
    }
    let ratio: Vec<Complex64> = (lo..=hi).map(|j| out.values[j] / refs[j]).collect();
    let mut phase = vec![ratio[0].arg()];
    for k in 1..ratio.len() {
        phase.push(phase[k - 1] + (ratio[k] / ratio[k - 1]).arg());
    }
    let rows = ratio.len();
    if rows < 4 {
        return None;
    }
    let xs = &out.grid[lo..=hi];
    let design = DMatrix::from_fn(rows, 4, |r, c| xs[r].powi(c as i32));
    let coef = design
        .svd(true, true)
        .solve(&DVector::from_vec(phase), 1e-12)
        .ok()?;
    Some([coef[0], coef[1], coef[2], coef[3]])
}

/// `S(t)` as a program of shears and Fouriers on `wire`:
/// `S(t) = F Shear(t) F Shear(1/t) F Shear(t)` (rightmost first).
pub fn squeeze_circuit(wire: usize, t: f64) -> Vec<CircuitGate> {
    let shear = |s: f64| CircuitGate::Diagonal { wire, k: 2, s };
    vec![
        shear(t),
        CircuitGate::Fourier { wire },
        shear(1.0 / t),
        CircuitGate::Fourier { wire },
        shear(t),
        CircuitGate::Fourier { wire },
    ]
}

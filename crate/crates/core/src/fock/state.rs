use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ops::{
    position_eigenbasis, quadrature_ops, single_mode_unitary, CMatrix, SingleModeGenerator,
};
use super::{FockConfig, FockError};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Two-mode and single-mode operations on a [`FockState`], addressed by label.
///
/// Conventions match the Gaussian engine: `Beamsplitter(θ) =
/// exp(θ (a_a† a_b − a_a a_b†))` maps `a_a → cos θ a_a + sin θ a_b`, and
/// `Cz = exp(i q_a q_b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FockGate {
    Single {
        mode: usize,
        gen: SingleModeGenerator,
    },
    Beamsplitter {
        a: usize,
        b: usize,
        theta: f64,
    },
    Cz {
        a: usize,
        b: usize,
    },
}

/// Amplitudes over the truncated number basis, row-major with the first
/// mode most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub dims: Vec<usize>,
    pub labels: Vec<usize>,
    pub amplitudes: Vec<Complex64>,
    /// Probability lost to truncation before the current amplitudes were
    /// renormalised.
    pub norm_leak: f64,
}

/// Outcome of [`FockState::photon_count`].
#[derive(Debug, Clone, PartialEq)]
pub struct CountResult {
    pub n: usize,
    pub state: FockState,
    /// `⟨ψ|Π_n|ψ⟩` for the (possibly unnormalised) input.
    pub probability: f64,
}

/// How [`FockState::photon_count`] picks the outcome.
pub enum CountOutcome<'a, R: Rng + ?Sized> {
    Forced(usize),
    Sample(&'a mut R),
}

impl FockState {
    pub fn vacuum(dims: &[usize]) -> Result<Self, FockError> {
        if dims.is_empty() || dims.iter().any(|&d| d < 2) {
            return Err(FockError::DimensionTooSmall);
        }
        let total = dims.iter().product();
        let mut amplitudes = vec![Complex64::from(0.0); total];
        amplitudes[0] = Complex64::from(1.0);
        Ok(FockState {
            dims: dims.to_vec(),
            labels: (1..=dims.len()).collect(),
            amplitudes,
            norm_leak: 0.0,
        })
    }

    /// Single mode with the given amplitudes (label 1).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, FockError> {
        if amps.len() < 2 {
            return Err(FockError::DimensionTooSmall);
        }
        Ok(FockState {
            dims: vec![amps.len()],
            labels: vec![1],
            amplitudes: amps,
            norm_leak: 0.0,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Total estimated truncation loss: recorded leak plus current norm deficit.
    pub fn leak(&self) -> f64 {
        self.norm_leak + (1.0 - self.norm_sqr()).max(0.0)
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        let mut out = self.clone();
        out.amplitudes.iter_mut().for_each(|a| *a /= n);
        out.norm_leak = self.leak();
        out
    }

    pub fn position(&self, label: usize) -> Result<usize, FockError> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(FockError::ModeNotLive(label))
    }

    fn stride(&self, pos: usize) -> usize {
        self.dims[pos + 1..].iter().product()
    }

    pub fn tensor(&self, other: &FockState) -> Result<Self, FockError> {
        if let Some(l) = other.labels.iter().find(|l| self.labels.contains(l)) {
            return Err(FockError::DuplicateLabel(*l));
        }
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * other.amplitudes.len());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        let mut dims = self.dims.clone();
        dims.extend(&other.dims);
        let mut labels = self.labels.clone();
        labels.extend(&other.labels);
        Ok(FockState {
            dims,
            labels,
            amplitudes,
            norm_leak: self.norm_leak + other.norm_leak,
        })
    }

    /// `F²` on one mode: `|n⟩ → (−1)^n |n⟩`, i.e. `ψ(q) → ψ(−q)`.
    pub fn reflected(&self, label: usize) -> Result<Self, FockError> {
        let pos = self.position(label)?;
        let (stride, d) = (self.stride(pos), self.dims[pos]);
        let mut out = self.clone();
        for (i, a) in out.amplitudes.iter_mut().enumerate() {
            if (i / stride % d) % 2 == 1 {
                *a = -*a;
            }
        }
        Ok(out)
    }

    /// Applies a `dim × dim` matrix to one mode.
    pub fn apply_single_matrix(&self, pos: usize, m: &CMatrix) -> Self {
        let d = self.dims[pos];
        let stride = self.stride(pos);
        let block = d * stride;
        let mut out = self.clone();
        let mut buf = vec![Complex64::from(0.0); d];
        for outer in (0..self.amplitudes.len()).step_by(block) {
            for inner in 0..stride {
                for (i, b) in buf.iter_mut().enumerate() {
                    *b = self.amplitudes[outer + i * stride + inner];
                }
                for i in 0..d {
                    let mut acc = Complex64::from(0.0);
                    for (j, b) in buf.iter().enumerate() {
                        acc += m[(i, j)] * b;
                    }
                    out.amplitudes[outer + i * stride + inner] = acc;
                }
            }
        }
        out
    }

    /// Calls `f` on every `dims[a] × dims[b]` slice with the other modes fixed.
    fn map_pairs(&self, pa: usize, pb: usize, mut f: impl FnMut(&mut CMatrix)) -> Self {
        let (da, db) = (self.dims[pa], self.dims[pb]);
        let (sa, sb) = (self.stride(pa), self.stride(pb));
        let mut out = self.clone();
        let mut slice = CMatrix::zeros(da, db);
        for base in 0..self.amplitudes.len() {
            if (base / sa) % da != 0 || (base / sb) % db != 0 {
                continue;
            }
            for i in 0..da {
                for j in 0..db {
                    slice[(i, j)] = self.amplitudes[base + i * sa + j * sb];
                }
            }
            f(&mut slice);
            for i in 0..da {
                for j in 0..db {
                    out.amplitudes[base + i * sa + j * sb] = slice[(i, j)];
                }
            }
        }
        out
    }

    pub fn apply(&self, gate: &FockGate, config: &FockConfig) -> Result<Self, FockError> {
        let out = match *gate {
            FockGate::Single { mode, gen } => {
                let pos = self.position(mode)?;
                let u = single_mode_unitary(gen, self.dims[pos], config.guard);
                self.apply_single_matrix(pos, &u)
            }
            FockGate::Cz { a, b } => {
                let (pa, pb) = self.pair(a, b)?;
                let (na, va) = truncated_position_basis(self.dims[pa], config.guard);
                let (nb, vb) = truncated_position_basis(self.dims[pb], config.guard);
                self.map_pairs(pa, pb, |m| {
                    // into the (guarded) position eigenbasis, phase, and back
                    let mut t = va.transpose() * &*m * &vb;
                    for i in 0..na.len() {
                        for j in 0..nb.len() {
                            t[(i, j)] *= (I * na[i] * nb[j]).exp();
                        }
                    }
                    *m = &va * t * vb.transpose();
                })
            }
            FockGate::Beamsplitter { a, b, theta } => {
                let (pa, pb) = self.pair(a, b)?;
                let (da, db) = (self.dims[pa], self.dims[pb]);
                let blocks = beamsplitter_blocks(da, db, theta);
                self.map_pairs(pa, pb, |m| {
                    let mut out = CMatrix::zeros(da, db);
                    for (total, u) in blocks.iter().enumerate() {
                        let lo = total.saturating_sub(db - 1);
                        let hi = total.min(da - 1);
                        for (r, n1) in (lo..=hi).enumerate() {
                            let mut acc = Complex64::from(0.0);
                            for (c, k1) in (lo..=hi).enumerate() {
                                acc += u[(r, c)] * m[(k1, total - k1)];
                            }
                            out[(n1, total - n1)] = acc;
                        }
                    }
                    *m = out;
                })
            }
        };
        if out.leak() > config.leak_threshold {
            return Err(FockError::Leak {
                leak: out.leak(),
                threshold: config.leak_threshold,
            });
        }
        Ok(out)
    }

    pub fn apply_all<'a>(
        &self,
        gates: impl IntoIterator<Item = &'a FockGate>,
        config: &FockConfig,
    ) -> Result<Self, FockError> {
        gates
            .into_iter()
            .try_fold(self.clone(), |st, g| st.apply(g, config))
    }

    fn pair(&self, a: usize, b: usize) -> Result<(usize, usize), FockError> {
        if a == b {
            return Err(FockError::OverlappingModes(a));
        }
        Ok((self.position(a)?, self.position(b)?))
    }

    /// Projects mode `label` onto `|n⟩`; the conditional state is renormalised
    /// and the mode removed.
    pub fn photon_count<R: Rng + ?Sized>(
        &self,
        label: usize,
        outcome: CountOutcome<'_, R>,
    ) -> Result<CountResult, FockError> {
        let pos = self.position(label)?;
        let probs = self.count_distribution(label)?;
        let n = match outcome {
            CountOutcome::Forced(n) => {
                if n >= self.dims[pos] {
                    return Err(FockError::OutcomeOutOfRange(n, self.dims[pos]));
                }
                n
            }
            CountOutcome::Sample(rng) => WeightedIndex::new(&probs)
                .map_err(|_| FockError::ZeroProbability(0))?
                .sample(rng),
        };
        let probability = probs[n];
        if !(probability > 0.0) {
            return Err(FockError::ZeroProbability(n));
        }
        let d = self.dims[pos];
        let stride = self.stride(pos);
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() / d);
        for outer in (0..self.amplitudes.len()).step_by(d * stride) {
            for inner in 0..stride {
                amplitudes.push(self.amplitudes[outer + n * stride + inner] / probability.sqrt());
            }
        }
        let mut dims = self.dims.clone();
        dims.remove(pos);
        let mut labels = self.labels.clone();
        labels.remove(pos);
        if dims.is_empty() {
            return Err(FockError::DimensionTooSmall);
        }
        Ok(CountResult {
            n,
            probability,
            state: FockState {
                dims,
                labels,
                amplitudes,
                norm_leak: self.leak(),
            },
        })
    }

    /// `⟨ψ|Π_n|ψ⟩` for every level of mode `label`.
    pub fn count_distribution(&self, label: usize) -> Result<Vec<f64>, FockError> {
        let pos = self.position(label)?;
        let d = self.dims[pos];
        let stride = self.stride(pos);
        Ok((0..d)
            .map(|n| {
                self.amplitudes
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| (i / stride) % d == n)
                    .map(|(_, a)| a.norm_sqr())
                    .sum()
            })
            .collect())
    }

    fn inner(&self, other: &FockState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|` for normalised copies.
    pub fn overlap(&self, other: &FockState) -> f64 {
        self.inner(other).norm() / (self.norm_sqr() * other.norm_sqr()).sqrt()
    }

    /// Mean vector and symmetrised covariance over `(q_1..q_n, p_1..p_n)`.
    pub fn quadrature_moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.dims.len();
        let norm = self.norm_sqr();
        let mut images = Vec::with_capacity(2 * n);
        for quad in 0..2 {
            for pos in 0..n {
                let (q, p) = quadrature_ops(self.dims[pos]);
                let op = if quad == 0 { q } else { p };
                images.push(self.apply_single_matrix(pos, &op));
            }
        }
        let mean = DVector::from_fn(2 * n, |i, _| self.inner(&images[i]).re / norm);
        let cov = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            images[i].inner(&images[j]).re / norm - mean[i] * mean[j]
        });
        (mean, cov)
    }

    pub fn to_json(&self) -> FockJson {
        FockJson {
            dims: self.dims.clone(),
            labels: self.labels.clone(),
            norm_leak: self.norm_leak,
            amplitudes: self.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
        }
    }

    /// CSV with columns `index,re,im`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "re", "im"])?;
        for (i, a) in self.amplitudes.iter().enumerate() {
            w.write_record([i.to_string(), a.re.to_string(), a.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockJson {
    pub dims: Vec<usize>,
    pub labels: Vec<usize>,
    pub norm_leak: f64,
    pub amplitudes: Vec<[f64; 2]>,
}

/// Eigenbasis of `q` on `dim + guard` levels, with rows cut to `dim`.
fn truncated_position_basis(dim: usize, guard: usize) -> (Vec<f64>, CMatrix) {
    let (nodes, v) = position_eigenbasis(dim + guard);
    (nodes, v.rows(0, dim).map(Complex64::from))
}

/// One unitary per total photon number `N` acting on the states
/// `|n₁, N − n₁⟩` that fit in the truncation.
fn beamsplitter_blocks(da: usize, db: usize, theta: f64) -> Vec<CMatrix> {
    (0..da + db - 1)
        .map(|total| {
            let lo = total.saturating_sub(db - 1);
            let hi = total.min(da - 1);
            let m = hi - lo + 1;
            // generator θ (a₁† a₂ − a₁ a₂†), real antisymmetric in this block
            let mut g = DMatrix::<f64>::zeros(m, m);
            for (k, n1) in (lo..=hi).enumerate() {
                let n2 = total - n1;
                if k + 1 < m {
                    g[(k + 1, k)] += (((n1 + 1) * n2) as f64).sqrt();
                }
                if k >= 1 {
                    g[(k - 1, k)] -= ((n1 * (n2 + 1)) as f64).sqrt();
                }
            }
            // exp(θ G) = exp(i · (−iθ G)) with −iθG Hermitian
            let h = g.map(|x| Complex64::new(0.0, -theta * x));
            super::ops::hermitian_exp(&h)
        })
        .collect()
}

/// `S(r)|0⟩` with `q` stretched by `r`, truncated to `dim` and renormalised.
pub fn squeezed_vacuum(r: f64, dim: usize, config: &FockConfig) -> Result<FockState, FockError> {
    if !(r > 0.0) {
        return Err(FockError::NonPositiveSqueeze(r));
    }
    if dim < 2 {
        return Err(FockError::DimensionTooSmall);
    }
    let rho = r.ln();
    let t = rho.tanh();
    let mut amps = vec![Complex64::from(0.0); dim];
    // c_{2k} = tanh^k √((2k)!) / (2^k k!) / √cosh
    let mut c = 1.0 / rho.cosh().sqrt();
    for k in 0..dim.div_ceil(2) {
        if k > 0 {
            let kf = k as f64;
            c *= t * ((2.0 * kf - 1.0) * 2.0 * kf).sqrt() / (2.0 * kf);
        }
        amps[2 * k] = Complex64::from(c);
    }
    let mut st = FockState::from_amplitudes(amps)?;
    let kept = st.norm_sqr();
    st = st.normalized();
    st.norm_leak = (1.0 - kept).max(0.0);
    if st.norm_leak > config.leak_threshold {
        return Err(FockError::Leak {
            leak: st.norm_leak,
            threshold: config.leak_threshold,
        });
    }
    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ops::{number_op, unitarity_defect};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> FockConfig {
        FockConfig::default()
    }

    #[test]
    fn reflection_is_half_turn() {
        let st = squeezed_vacuum(1.3, 12, &cfg())
            .unwrap()
            .tensor(&FockState {
                labels: vec![2],
                ..squeezed_vacuum(0.8, 12, &cfg()).unwrap()
            })
            .unwrap()
            .apply(
                &FockGate::Single {
                    mode: 2,
                    gen: SingleModeGenerator::DisplaceX(0.4),
                },
                &cfg(),
            )
            .unwrap();
        let turned = st
            .apply(
                &FockGate::Single {
                    mode: 2,
                    gen: SingleModeGenerator::Rotate(std::f64::consts::PI),
                },
                &cfg(),
            )
            .unwrap();
        let r = st.reflected(2).unwrap();
        let diff = r
            .amplitudes
            .iter()
            .zip(&turned.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn squeezed_vacuum_basics() {
        let v = squeezed_vacuum(1.0, 10, &cfg()).unwrap();
        assert_eq!(v.amplitudes[0], Complex64::from(1.0));
        assert!(v.amplitudes[1..].iter().all(|a| a.norm() == 0.0));
        let s = squeezed_vacuum(1.5, 40, &cfg()).unwrap();
        assert!(s
            .amplitudes
            .iter()
            .skip(1)
            .step_by(2)
            .all(|a| a.norm() == 0.0));
        let (_, cov) = s.quadrature_moments();
        assert!((cov[(0, 0)] - 1.5 * 1.5 / 2.0).abs() < 1e-8);
        assert!((cov[(1, 1)] - 1.0 / (2.0 * 1.5 * 1.5)).abs() < 1e-8);
        assert!(squeezed_vacuum(0.0, 10, &cfg()).is_err());
        let strict = FockConfig {
            leak_threshold: 1e-12,
            ..cfg()
        };
        assert!(matches!(
            squeezed_vacuum(4.0, 10, &strict),
            Err(FockError::Leak { .. })
        ));
    }

    #[test]
    fn beamsplitter_keeps_vacuum_and_is_unitary() {
        let v = FockState::vacuum(&[6, 6]).unwrap();
        let out = v
            .apply(
                &FockGate::Beamsplitter {
                    a: 1,
                    b: 2,
                    theta: 0.4,
                },
                &cfg(),
            )
            .unwrap();
        assert!((out.amplitudes[0] - Complex64::from(1.0)).norm() < 1e-14);
        for u in beamsplitter_blocks(5, 7, 0.9) {
            assert!(unitarity_defect(&u, u.nrows()) < 1e-12);
        }
    }

    #[test]
    fn beamsplitter_moves_one_photon() {
        // |1,0⟩ -> cos θ |1,0⟩ − sin θ |0,1⟩ under a₁ → cos a₁ + sin a₂
        let mut st = FockState::vacuum(&[3, 3]).unwrap();
        st.amplitudes[0] = Complex64::from(0.0);
        st.amplitudes[3] = Complex64::from(1.0);
        let th = 0.3;
        let out = st
            .apply(
                &FockGate::Beamsplitter {
                    a: 1,
                    b: 2,
                    theta: th,
                },
                &cfg(),
            )
            .unwrap();
        assert!((out.amplitudes[3].re - th.cos()).abs() < 1e-14);
        assert!((out.amplitudes[1].re + th.sin()).abs() < 1e-14);
    }

    #[test]
    fn photon_count_on_vacuum_and_completeness() {
        let v = FockState::vacuum(&[4, 4]).unwrap();
        let r = v
            .photon_count::<ChaCha8Rng>(1, CountOutcome::Forced(0))
            .unwrap();
        assert_eq!(r.n, 0);
        assert!((r.probability - 1.0).abs() < 1e-15);
        assert_eq!(r.state.labels, vec![2]);

        let st = squeezed_vacuum(1.3, 20, &cfg())
            .unwrap()
            .tensor(&FockState {
                labels: vec![2],
                ..squeezed_vacuum(1.2, 20, &cfg()).unwrap()
            })
            .unwrap()
            .apply_all(
                &[
                    FockGate::Beamsplitter {
                        a: 1,
                        b: 2,
                        theta: 0.7,
                    },
                    FockGate::Single {
                        mode: 1,
                        gen: SingleModeGenerator::DisplaceX(0.8),
                    },
                ],
                &cfg(),
            )
            .unwrap();
        let probs = st.count_distribution(1).unwrap();
        assert!(probs.iter().all(|&p| p >= 0.0));
        assert!((probs.iter().sum::<f64>() - st.norm_sqr()).abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = st.photon_count(1, CountOutcome::Sample(&mut rng)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = st.photon_count(1, CountOutcome::Sample(&mut rng)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn displaced_state_counts_near_energy() {
        let r = 3.0;
        let st = FockState::vacuum(&[40])
            .unwrap()
            .apply(
                &FockGate::Single {
                    mode: 1,
                    gen: SingleModeGenerator::DisplaceZ(r),
                },
                &cfg(),
            )
            .unwrap();
        let probs = st.count_distribution(1).unwrap();
        let mean: f64 = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        assert!((mean - r * r / 2.0).abs() < 1e-6);
        let var: f64 = probs
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64 - mean).powi(2) * p)
            .sum();
        assert!((var - mean).abs() < 1e-5);
    }

    #[test]
    fn forced_zero_probability_is_an_error() {
        let v = FockState::vacuum(&[4, 4]).unwrap();
        assert_eq!(
            v.photon_count::<ChaCha8Rng>(1, CountOutcome::Forced(2))
                .map(|r| r.n),
            Err(FockError::ZeroProbability(2))
        );
        assert_eq!(
            v.photon_count::<ChaCha8Rng>(1, CountOutcome::Forced(9))
                .map(|r| r.n),
            Err(FockError::OutcomeOutOfRange(9, 4))
        );
    }

    #[test]
    fn rotation_preserves_number() {
        let st = squeezed_vacuum(1.4, 20, &cfg()).unwrap();
        let rot = st
            .apply(
                &FockGate::Single {
                    mode: 1,
                    gen: SingleModeGenerator::Rotate(0.9),
                },
                &cfg(),
            )
            .unwrap();
        let n = number_op(20);
        let e = |s: &FockState| s.inner(&s.apply_single_matrix(0, &n)).re;
        assert!((e(&st) - e(&rot)).abs() < 1e-12);
    }

    #[test]
    fn exports() {
        let st = squeezed_vacuum(
            1.2,
            4,
            &FockConfig {
                leak_threshold: 1.0,
                ..cfg()
            },
        )
        .unwrap();
        let json = serde_json::to_string(&st.to_json()).unwrap();
        assert!(json.contains("\"dims\":[4]"));
        let mut buf = Vec::new();
        st.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,re,im\n0,"));
        assert_eq!(text.lines().count(), 5);
    }
}

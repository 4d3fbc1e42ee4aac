use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::symplectic::{generation_matrix, omega, GaussianGate, SymplecticOp};
use super::{GaussianError, DEFAULT_TOL};
use crate::graph::Graph;
use crate::nullifier::NullifierSet;

/// First and second moments of an `n`-mode Gaussian state.
///
/// `mean` and `cov` use `(q_1..q_n, p_1..p_n)` ordering; `labels[k]` is the
/// original label of the mode at position `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub labels: Vec<usize>,
}

impl GaussianState {
    /// `n` vacuum modes labelled `1..=n`: zero mean, covariance `I / 2`.
    pub fn vacuum(n: usize) -> Result<Self, GaussianError> {
        if n == 0 {
            return Err(GaussianError::NoModes);
        }
        Ok(GaussianState {
            mean: DVector::zeros(2 * n),
            cov: DMatrix::identity(2 * n, 2 * n) * 0.5,
            labels: (1..=n).collect(),
        })
    }

    /// Validated constructor for arbitrary moments.
    pub fn new(
        mean: DVector<f64>,
        cov: DMatrix<f64>,
        labels: Vec<usize>,
    ) -> Result<Self, GaussianError> {
        let d = 2 * labels.len();
        if labels.is_empty() {
            return Err(GaussianError::NoModes);
        }
        if mean.len() != d || cov.nrows() != d || cov.ncols() != d {
            return Err(GaussianError::DimensionMismatch {
                expected: d,
                got: mean.len().max(cov.nrows()),
            });
        }
        let st = GaussianState { mean, cov, labels };
        st.check(DEFAULT_TOL)?;
        Ok(st)
    }

    pub fn modes(&self) -> usize {
        self.labels.len()
    }

    pub fn position(&self, label: usize) -> Result<usize, GaussianError> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(GaussianError::ModeNotLive(label))
    }

    /// Symmetry and the uncertainty relation `cov + iΩ/2 ⪰ 0`.
    pub fn check(&self, tol: f64) -> Result<(), GaussianError> {
        let asym = (&self.cov - self.cov.transpose()).amax();
        if asym > tol {
            return Err(GaussianError::NotSymmetric(asym));
        }
        let w = omega(self.modes());
        let herm: DMatrix<Complex64> =
            self.cov.map(Complex64::from) + w.map(|x| Complex64::new(0.0, 0.5 * x));
        let min = herm
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(GaussianError::Uncertainty(min));
        }
        Ok(())
    }

    /// `det(2 cov)`; equal to 1 for pure states.
    pub fn purity_determinant(&self) -> f64 {
        (&self.cov * 2.0).determinant()
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.purity_determinant() - 1.0).abs() <= tol
    }

    pub fn apply(&self, op: &SymplecticOp) -> Result<Self, GaussianError> {
        if op.c.len() != self.mean.len() {
            return Err(GaussianError::DimensionMismatch {
                expected: self.mean.len(),
                got: op.c.len(),
            });
        }
        Ok(GaussianState {
            mean: &op.l * &self.mean + &op.c,
            cov: &op.l * &self.cov * op.l.transpose(),
            labels: self.labels.clone(),
        })
    }

    pub fn apply_gate(&self, gate: &GaussianGate) -> Result<Self, GaussianError> {
        self.apply(&SymplecticOp::gate(gate, &self.labels)?)
    }

    pub fn apply_gates<'a>(
        &self,
        gates: impl IntoIterator<Item = &'a GaussianGate>,
    ) -> Result<Self, GaussianError> {
        gates
            .into_iter()
            .try_fold(self.clone(), |st, g| st.apply_gate(g))
    }

    /// Appends the modes of `other` after those of `self`.
    pub fn tensor(&self, other: &GaussianState) -> Result<Self, GaussianError> {
        if let Some(l) = other.labels.iter().find(|l| self.labels.contains(l)) {
            return Err(GaussianError::DuplicateLabel(*l));
        }
        let (a, b) = (self.modes(), other.modes());
        let n = a + b;
        // index of each source quadrature in the combined ordering
        let map_a = |i: usize| if i < a { i } else { n + i - a };
        let map_b = |i: usize| if i < b { a + i } else { n + a + i - b };
        let mut mean = DVector::zeros(2 * n);
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..2 * a {
            mean[map_a(i)] = self.mean[i];
            for j in 0..2 * a {
                cov[(map_a(i), map_a(j))] = self.cov[(i, j)];
            }
        }
        for i in 0..2 * b {
            mean[map_b(i)] = other.mean[i];
            for j in 0..2 * b {
                cov[(map_b(i), map_b(j))] = other.cov[(i, j)];
            }
        }
        let mut labels = self.labels.clone();
        labels.extend(&other.labels);
        Ok(GaussianState { mean, cov, labels })
    }

    /// Moments restricted to the listed labels, in that order.
    pub fn reduced(&self, keep: &[usize]) -> Result<Self, GaussianError> {
        let n = self.modes();
        let pos: Vec<usize> = keep
            .iter()
            .map(|&l| self.position(l))
            .collect::<Result<_, _>>()?;
        let idx: Vec<usize> = pos
            .iter()
            .cloned()
            .chain(pos.iter().map(|p| n + p))
            .collect();
        let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i]));
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.cov[(idx[r], idx[c])]);
        Ok(GaussianState {
            mean,
            cov,
            labels: keep.to_vec(),
        })
    }

    /// Multivariate normal density of the Wigner function at `(q, p)`.
    pub fn wigner_eval(&self, q: &[f64], p: &[f64]) -> Result<f64, GaussianError> {
        let n = self.modes();
        if q.len() != n || p.len() != n {
            return Err(GaussianError::DimensionMismatch {
                expected: n,
                got: q.len().max(p.len()),
            });
        }
        let x = DVector::from_iterator(2 * n, q.iter().chain(p).cloned()) - &self.mean;
        let Some(chol) = self.cov.clone().cholesky() else {
            let eig = SymmetricEigen::new(self.cov.clone());
            let k = eig.eigenvalues.imin();
            return Err(GaussianError::SingularCovariance {
                direction: eig.eigenvectors.column(k).iter().cloned().collect(),
            });
        };
        let sol = chol.solve(&x);
        let quad = x.dot(&sol);
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let log_norm = -(n as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det;
        Ok((log_norm - 0.5 * quad).exp())
    }

    /// Per-form `(mean, variance)` of each nullifier in `ns`, which must
    /// address the same labels in the same order.
    pub fn nullifier_stats(&self, ns: &NullifierSet) -> Result<Vec<(f64, f64)>, GaussianError> {
        if ns.labels() != self.labels.as_slice() {
            return Err(GaussianError::LabelMismatch);
        }
        Ok(ns
            .forms()
            .iter()
            .map(|f| {
                let v = DVector::from_vec(f.operator_vector_f64());
                let mean = v.dot(&self.mean) + f.constant_f64();
                let var = (v.transpose() * &self.cov * &v)[(0, 0)];
                (mean, var)
            })
            .collect())
    }

    pub fn to_json(&self) -> StateJson {
        StateJson {
            ordering: "q1..qn,p1..pn".into(),
            labels: self.labels.clone(),
            dim: self.mean.len(),
            mean: self.mean.iter().cloned().collect(),
            cov: self.cov.transpose().iter().cloned().collect(),
        }
    }
}

/// JSON dump: row-major covariance with its dimension and ordering tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub ordering: String,
    pub labels: Vec<usize>,
    pub dim: usize,
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
}

impl StateJson {
    pub fn into_state(self) -> Result<GaussianState, GaussianError> {
        let d = self.dim;
        if self.cov.len() != d * d {
            return Err(GaussianError::DimensionMismatch {
                expected: d * d,
                got: self.cov.len(),
            });
        }
        GaussianState::new(
            DVector::from_vec(self.mean),
            DMatrix::from_row_slice(d, d, &self.cov),
            self.labels,
        )
    }
}

/// `M(s)` applied to the vacuum.
pub fn canonical_cluster(g: &Graph, s: f64) -> Result<GaussianState, GaussianError> {
    GaussianState::vacuum(g.n())?.apply(&generation_matrix(g, s)?)
}

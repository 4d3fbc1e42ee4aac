use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{GaussianError, DEFAULT_TOL};
use crate::graph::Graph;

/// Gaussian gates addressed by mode label.
///
/// Heisenberg actions `U† v U` in `(q, p)` form:
///
/// | gate | action |
/// |------|--------|
/// | `Rotate(θ)` | `q → cos θ q − sin θ p`, `p → sin θ q + cos θ p` |
/// | `X(s)` | `q → q + s` |
/// | `Z(s)` | `p → p + s` |
/// | `Squeeze(s)` | `q → s q`, `p → p / s` |
/// | `Shear(s)` | `p → p + s q` |
/// | `Cz` | `p_a → p_a + q_b`, `p_b → p_b + q_a` |
/// | `Beamsplitter(θ)` | `v_a → cos θ v_a + sin θ v_b`, `v_b → cos θ v_b − sin θ v_a` for `v ∈ {q, p}` |
///
/// `Rotate(π/2)` is the Fourier gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GaussianGate {
    Rotate { mode: usize, theta: f64 },
    X { mode: usize, s: f64 },
    Z { mode: usize, s: f64 },
    Squeeze { mode: usize, s: f64 },
    Shear { mode: usize, s: f64 },
    Cz { a: usize, b: usize },
    Beamsplitter { a: usize, b: usize, theta: f64 },
}

impl GaussianGate {
    pub fn fourier(mode: usize) -> Self {
        GaussianGate::Rotate {
            mode,
            theta: std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn modes(&self) -> Vec<usize> {
        match *self {
            GaussianGate::Rotate { mode, .. }
            | GaussianGate::X { mode, .. }
            | GaussianGate::Z { mode, .. }
            | GaussianGate::Squeeze { mode, .. }
            | GaussianGate::Shear { mode, .. } => vec![mode],
            GaussianGate::Cz { a, b } | GaussianGate::Beamsplitter { a, b, .. } => vec![a, b],
        }
    }
}

/// `v → L v + c` on `2n` quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticOp {
    pub l: DMatrix<f64>,
    pub c: DVector<f64>,
}

/// `Ω = [[0, I], [−I, 0]]` in `(q, p)` block ordering.
pub fn omega(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        w[(i, n + i)] = 1.0;
        w[(n + i, i)] = -1.0;
    }
    w
}

impl SymplecticOp {
    pub fn identity(n: usize) -> Self {
        SymplecticOp {
            l: DMatrix::identity(2 * n, 2 * n),
            c: DVector::zeros(2 * n),
        }
    }

    pub fn modes(&self) -> usize {
        self.c.len() / 2
    }

    /// Embeds `gate` in an `n`-mode op whose positions carry `labels`.
    pub fn gate(gate: &GaussianGate, labels: &[usize]) -> Result<Self, GaussianError> {
        let n = labels.len();
        let pos = |l: usize| {
            labels
                .iter()
                .position(|&x| x == l)
                .ok_or(GaussianError::ModeNotLive(l))
        };
        let mut op = SymplecticOp::identity(n);
        let single = |op: &mut SymplecticOp, k: usize, m: [[f64; 2]; 2]| {
            op.l[(k, k)] = m[0][0];
            op.l[(k, n + k)] = m[0][1];
            op.l[(n + k, k)] = m[1][0];
            op.l[(n + k, n + k)] = m[1][1];
        };
        let pair = |a: usize, b: usize| -> Result<(usize, usize), GaussianError> {
            if a == b {
                return Err(GaussianError::OverlappingModes(a));
            }
            Ok((pos(a)?, pos(b)?))
        };
        match *gate {
            GaussianGate::Rotate { mode, theta } => {
                let (s, c) = theta.sin_cos();
                single(&mut op, pos(mode)?, [[c, -s], [s, c]]);
            }
            GaussianGate::X { mode, s } => op.c[pos(mode)?] = s,
            GaussianGate::Z { mode, s } => op.c[n + pos(mode)?] = s,
            GaussianGate::Squeeze { mode, s } => {
                if !(s > 0.0) {
                    return Err(GaussianError::NonPositiveSqueeze(s));
                }
                single(&mut op, pos(mode)?, [[s, 0.0], [0.0, 1.0 / s]]);
            }
            GaussianGate::Shear { mode, s } => single(&mut op, pos(mode)?, [[1.0, 0.0], [s, 1.0]]),
            GaussianGate::Cz { a, b } => {
                let (i, j) = pair(a, b)?;
                op.l[(n + i, j)] = 1.0;
                op.l[(n + j, i)] = 1.0;
            }
            GaussianGate::Beamsplitter { a, b, theta } => {
                let (i, j) = pair(a, b)?;
                let (s, c) = theta.sin_cos();
                for off in [0, n] {
                    op.l[(off + i, off + i)] = c;
                    op.l[(off + i, off + j)] = s;
                    op.l[(off + j, off + j)] = c;
                    op.l[(off + j, off + i)] = -s;
                }
            }
        }
        Ok(op)
    }

    /// Gate on modes labelled `1..=n`.
    pub fn gate_on(n: usize, gate: &GaussianGate) -> Result<Self, GaussianError> {
        let labels: Vec<usize> = (1..=n).collect();
        Self::gate(gate, &labels)
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &SymplecticOp) -> SymplecticOp {
        SymplecticOp {
            l: &next.l * &self.l,
            c: &next.l * &self.c + &next.c,
        }
    }

    pub fn inverse(&self) -> SymplecticOp {
        // L⁻¹ = −Ω Lᵀ Ω for symplectic L
        let w = omega(self.modes());
        let inv = -(&w * self.l.transpose() * &w);
        let c = -(&inv * &self.c);
        SymplecticOp { l: inv, c }
    }

    /// Checks `L Ω Lᵀ = Ω` and `det L = 1` to `tol`.
    pub fn check(&self, tol: f64) -> Result<(), GaussianError> {
        let w = omega(self.modes());
        let err = (&self.l * &w * self.l.transpose() - &w).amax();
        if err > tol {
            return Err(GaussianError::NotSymplectic(err));
        }
        let det = self.l.determinant();
        if (det - 1.0).abs() > tol.max(tol * det.abs()) {
            return Err(GaussianError::NotSymplectic((det - 1.0).abs()));
        }
        Ok(())
    }

    pub fn is_symplectic(&self) -> bool {
        self.check(DEFAULT_TOL).is_ok()
    }
}

/// `M(s) = C · S(s)`: squeeze every mode by `s`, then CZ along every edge.
/// In block form `[[s I, 0], [s A, I / s]]` with `A` the adjacency matrix.
pub fn generation_matrix(g: &Graph, s: f64) -> Result<SymplecticOp, GaussianError> {
    if !(s > 0.0) {
        return Err(GaussianError::NonPositiveSqueeze(s));
    }
    let n = g.n();
    let mut op = SymplecticOp::identity(n);
    let adj = g.adjacency_matrix();
    for i in 0..n {
        op.l[(i, i)] = s;
        op.l[(n + i, n + i)] = 1.0 / s;
        for j in 0..n {
            op.l[(n + i, j)] = s * adj[(i, j)];
        }
    }
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn fourier_is_quarter_rotation() {
        let f = SymplecticOp::gate_on(1, &GaussianGate::fourier(1)).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((f.l - want).amax() < 1e-15);
        assert_eq!(f.c, DVector::zeros(2));
        let r = SymplecticOp::gate_on(
            1,
            &GaussianGate::Rotate {
                mode: 1,
                theta: FRAC_PI_2,
            },
        )
        .unwrap();
        assert!(r.is_symplectic());
    }

    #[test]
    fn cz_and_displacements() {
        let cz = SymplecticOp::gate_on(2, &GaussianGate::Cz { a: 1, b: 2 }).unwrap();
        #[rustfmt::skip]
        let want = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 1.0, 1.0, 0.0,
            1.0, 0.0, 0.0, 1.0,
        ]);
        assert_eq!(cz.l, want);
        let x = SymplecticOp::gate_on(2, &GaussianGate::X { mode: 2, s: 0.7 }).unwrap();
        assert_eq!(x.l, DMatrix::identity(4, 4));
        assert_eq!(x.c.as_slice(), &[0.0, 0.7, 0.0, 0.0]);
        let z = SymplecticOp::gate_on(1, &GaussianGate::Z { mode: 1, s: -2.0 }).unwrap();
        assert_eq!(z.c.as_slice(), &[0.0, -2.0]);
    }

    #[test]
    fn gate_errors() {
        assert_eq!(
            SymplecticOp::gate_on(2, &GaussianGate::Cz { a: 2, b: 2 }),
            Err(GaussianError::OverlappingModes(2))
        );
        assert_eq!(
            SymplecticOp::gate_on(1, &GaussianGate::Squeeze { mode: 1, s: -1.0 }),
            Err(GaussianError::NonPositiveSqueeze(-1.0))
        );
        assert_eq!(
            SymplecticOp::gate_on(1, &GaussianGate::X { mode: 4, s: 1.0 }),
            Err(GaussianError::ModeNotLive(4))
        );
    }

    #[test]
    fn two_node_generation_matrix() {
        let s = 1.7;
        let m = generation_matrix(&Graph::path(2).unwrap(), s).unwrap();
        #[rustfmt::skip]
        let want = DMatrix::from_row_slice(4, 4, &[
            s, 0.0, 0.0, 0.0,
            0.0, s, 0.0, 0.0,
            0.0, s, 1.0 / s, 0.0,
            s, 0.0, 0.0, 1.0 / s,
        ]);
        assert!((m.l - want).amax() < 1e-15);
        let edgeless = generation_matrix(&Graph::edgeless(3).unwrap(), s).unwrap();
        let mut diag = DMatrix::zeros(6, 6);
        for i in 0..3 {
            diag[(i, i)] = s;
            diag[(3 + i, 3 + i)] = 1.0 / s;
        }
        assert_eq!(edgeless.l, diag);
    }

    #[test]
    fn generation_matrix_is_composition_of_gates() {
        let g = Graph::path(3).unwrap();
        let s = 2.5;
        let mut op = SymplecticOp::identity(3);
        for v in 1..=3 {
            op = op.then(&SymplecticOp::gate_on(3, &GaussianGate::Squeeze { mode: v, s }).unwrap());
        }
        for &(a, b) in g.edges() {
            op = op.then(&SymplecticOp::gate_on(3, &GaussianGate::Cz { a, b }).unwrap());
        }
        let m = generation_matrix(&g, s).unwrap();
        assert!((op.l - m.l).amax() < 1e-14);
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = GaussianGate> {
        let mode = 1..=n;
        prop_oneof![
            (mode.clone(), -6.3..6.3f64)
                .prop_map(|(mode, theta)| GaussianGate::Rotate { mode, theta }),
            (mode.clone(), -5.0..5.0f64).prop_map(|(mode, s)| GaussianGate::X { mode, s }),
            (mode.clone(), -5.0..5.0f64).prop_map(|(mode, s)| GaussianGate::Z { mode, s }),
            (mode.clone(), 0.1..10.0f64).prop_map(|(mode, s)| GaussianGate::Squeeze { mode, s }),
            (mode.clone(), -5.0..5.0f64).prop_map(|(mode, s)| GaussianGate::Shear { mode, s }),
            (mode.clone(), mode.clone())
                .prop_filter("distinct", |(a, b)| a != b)
                .prop_map(|(a, b)| GaussianGate::Cz { a, b }),
            (mode.clone(), mode, -6.3..6.3f64)
                .prop_filter("distinct", |(a, b, _)| a != b)
                .prop_map(|(a, b, theta)| GaussianGate::Beamsplitter { a, b, theta }),
        ]
    }

    proptest! {
        #[test]
        fn every_gate_is_symplectic(g in arb_gate(4)) {
            let op = SymplecticOp::gate_on(4, &g).unwrap();
            prop_assert!(op.check(1e-10).is_ok());
        }

        #[test]
        fn composite_inverse_round_trips(gs in prop::collection::vec(arb_gate(3), 1..8)) {
            let op = gs.iter().fold(SymplecticOp::identity(3), |acc, g| {
                acc.then(&SymplecticOp::gate_on(3, g).unwrap())
            });
            let id = op.then(&op.inverse());
            prop_assert!((id.l - DMatrix::<f64>::identity(6, 6)).amax() < 1e-6 * op.l.amax().powi(2));
            prop_assert!(id.c.amax() < 1e-6 * (1.0 + op.c.amax()) * op.l.amax().powi(2));
        }
    }
}

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Annihilation operator truncated to `dim` levels.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::from((n as f64).sqrt());
    }
    a
}

/// `(q, p)` with `q = (a + a†)/√2`, `p = (a − a†)/(i√2)`.
pub fn quadrature_ops(dim: usize) -> (CMatrix, CMatrix) {
    let a = annihilation(dim);
    let ad = a.adjoint();
    let q = (&a + &ad) * Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
    let p = (&a - &ad) * (-I * std::f64::consts::FRAC_1_SQRT_2);
    (q, p)
}

pub fn number_op(dim: usize) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| Complex64::from(n as f64)))
}

/// `exp(i H)` for Hermitian `H` by eigendecomposition.
pub fn hermitian_exp(h: &CMatrix) -> CMatrix {
    let herm = (h + h.adjoint()) * Complex64::from(0.5);
    let eig = herm.symmetric_eigen();
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| (I * l).exp()),
    );
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&phases) * v.adjoint()
}

/// Real orthonormal eigenbasis of the truncated position operator:
/// `(nodes, V)` with `q = V diag(nodes) Vᵀ`.
pub fn position_eigenbasis(dim: usize) -> (Vec<f64>, DMatrix<f64>) {
    let mut q = DMatrix::<f64>::zeros(dim, dim);
    for n in 1..dim {
        let v = (n as f64 / 2.0).sqrt();
        q[(n - 1, n)] = v;
        q[(n, n - 1)] = v;
    }
    let eig = q.symmetric_eigen();
    (eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors)
}

/// Single-mode Gaussian and cubic generators.
///
/// | gate | unitary | Heisenberg action |
/// |------|---------|-------------------|
/// | `Rotate(θ)` | `exp(iθ n)` | `q → cos θ q − sin θ p` |
/// | `DisplaceX(r)` | `exp(−i r p)` | `q → q + r` |
/// | `DisplaceZ(r)` | `exp(i r q)` | `p → p + r` |
/// | `Squeeze(t)` | `exp(−i ln t (qp + pq)/2)` | `q → t q` |
/// | `Shear(s)` | `exp(i s q²/2)` | `p → p + s q` |
/// | `Cubic(γ)` | `exp(i γ q³)` | `p → p + 3γ q²` |
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingleModeGenerator {
    Rotate(f64),
    DisplaceX(f64),
    DisplaceZ(f64),
    Squeeze(f64),
    Shear(f64),
    Cubic(f64),
}

/// The unitary for `g`, built in `dim + guard` levels and cut to `dim`.
pub fn single_mode_unitary(g: SingleModeGenerator, dim: usize, guard: usize) -> CMatrix {
    let big = dim + guard;
    let u = match g {
        SingleModeGenerator::Rotate(theta) => {
            CMatrix::from_diagonal(&DVector::from_fn(big, |n, _| (I * theta * n as f64).exp()))
        }
        SingleModeGenerator::DisplaceZ(r) => position_function(big, |x| r * x),
        SingleModeGenerator::Shear(s) => position_function(big, |x| s * x * x / 2.0),
        SingleModeGenerator::Cubic(gamma) => position_function(big, |x| gamma * x.powi(3)),
        SingleModeGenerator::DisplaceX(r) => {
            let (_, p) = quadrature_ops(big);
            hermitian_exp(&(p * Complex64::from(-r)))
        }
        SingleModeGenerator::Squeeze(t) => {
            let (q, p) = quadrature_ops(big);
            let sym = (&q * &p + &p * &q) * Complex64::from(-t.ln() / 2.0);
            hermitian_exp(&sym)
        }
    };
    u.view((0, 0), (dim, dim)).into_owned()
}

/// `exp(i f(q))` on the truncated position eigenbasis.
fn position_function(dim: usize, f: impl Fn(f64) -> f64) -> CMatrix {
    let (nodes, v) = position_eigenbasis(dim);
    let vc = v.map(Complex64::from);
    let phases = DVector::from_iterator(dim, nodes.iter().map(|&x| (I * f(x)).exp()));
    &vc * CMatrix::from_diagonal(&phases) * vc.transpose()
}

/// `‖U†U − I‖_max` restricted to the leading `interior` levels.
///
/// Truncation makes the top levels of `U` non-unitary however large the guard;
/// the clean interior shrinks as the gate strength grows.
pub fn unitarity_defect(u: &CMatrix, interior: usize) -> f64 {
    let k = interior.min(u.nrows());
    let uu = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((uu[(i, j)] - target).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_quadratures() {
        let (q, p) = quadrature_ops(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((q[(0, 1)].re - h).abs() < 1e-15 && (q[(1, 0)].re - h).abs() < 1e-15);
        assert_eq!(q[(0, 0)], Complex64::from(0.0));
        assert_eq!(q.adjoint(), q);
        assert_eq!(p.adjoint(), p);
    }

    #[test]
    fn commutator_defect_sits_in_last_level() {
        let dim = 12;
        let (q, p) = quadrature_ops(dim);
        let c = &q * &p - &p * &q;
        for i in 0..dim {
            for j in 0..dim {
                let want = if i == j && i + 1 < dim {
                    I
                } else {
                    Complex64::from(0.0)
                };
                if i + 1 < dim {
                    assert!((c[(i, j)] - want).norm() < 1e-13);
                }
            }
        }
        assert!((c[(dim - 1, dim - 1)] - I).norm() > 1.0);
    }

    #[test]
    fn unitaries_are_unitary_inside_guard() {
        // Levels within `band` of the cut can be pushed past it by the gate.
        let (dim, guard) = (40, 8);
        for (g, band) in [
            (SingleModeGenerator::Rotate(0.7), 0),
            (SingleModeGenerator::DisplaceX(1.0), 16),
            (SingleModeGenerator::DisplaceZ(-0.8), 16),
            (SingleModeGenerator::Squeeze(1.4), 30),
            (SingleModeGenerator::Shear(0.5), 26),
            (SingleModeGenerator::Cubic(0.05), 32),
        ] {
            let u = single_mode_unitary(g, dim, guard);
            assert!(unitarity_defect(&u, dim - band) < 1e-8, "{g:?}");
        }
    }

    #[test]
    fn quarter_rotation_maps_q_to_minus_p() {
        let dim = 20;
        let f = single_mode_unitary(
            SingleModeGenerator::Rotate(std::f64::consts::FRAC_PI_2),
            dim,
            0,
        );
        let (q, p) = quadrature_ops(dim);
        let heis = f.adjoint() * q * &f;
        assert!((heis + p).camax() < 1e-12);
    }
}

use serde::{Deserialize, Serialize};

use super::MbqcError;
use crate::gaussian::{GaussianGate, GaussianState, SymplecticOp};
use crate::nullifier::{Gate, NullifierSet, Rational};

/// One correction tag, in the order it acts on the ideal output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", content = "m", rename_all = "snake_case")]
pub enum Correction {
    X(f64),
    Z(f64),
    F,
    FInv,
    Reflection,
}

impl Correction {
    pub fn gaussian_gates(&self, mode: usize) -> Vec<GaussianGate> {
        let f = GaussianGate::fourier(mode);
        match *self {
            Correction::X(s) => vec![GaussianGate::X { mode, s }],
            Correction::Z(s) => vec![GaussianGate::Z { mode, s }],
            Correction::F => vec![f],
            Correction::Reflection => vec![f.clone(), f],
            Correction::FInv => vec![f.clone(), f.clone(), f],
        }
    }

    /// Exact form; displacements must be finite floats.
    pub fn exact_gate(&self, mode: usize) -> Result<Gate, MbqcError> {
        let exact = |s: f64| Rational::from_float(s).ok_or(MbqcError::NotFinite(s));
        Ok(match *self {
            Correction::X(s) => Gate::X { mode, s: exact(s)? },
            Correction::Z(s) => Gate::Z { mode, s: exact(s)? },
            Correction::F => Gate::Fourier { mode },
            Correction::FInv => Gate::FourierInv { mode },
            Correction::Reflection => Gate::Reflect { mode },
        })
    }

    pub fn inverse(&self) -> Correction {
        match *self {
            Correction::X(s) => Correction::X(-s),
            Correction::Z(s) => Correction::Z(-s),
            Correction::F => Correction::FInv,
            Correction::FInv => Correction::F,
            Correction::Reflection => Correction::Reflection,
        }
    }
}

/// Byproduct on one wire in normal form `F^k X(x) Z(z)`: displacements
/// innermost, Fourier power outermost, global phases dropped.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WireFrame {
    pub fourier: u8,
    pub x: f64,
    pub z: f64,
}

impl WireFrame {
    /// Frame left by teleporting with outcome `m`: `X(m) F`.
    pub fn hop(m: f64) -> Self {
        WireFrame::default().after_hop(m)
    }

    /// `X(m) F · self`.
    pub fn after_hop(self, m: f64) -> Self {
        let mut out = WireFrame {
            fourier: (self.fourier + 1) % 4,
            ..self
        };
        out.push_displacement(m, 0.0);
        out
    }

    /// Applies `X(dx) Z(dz)` on the outside and restores normal form.
    /// Moving past `F` maps `X(a) Z(b)` to `X(b) Z(−a)`.
    pub fn push_displacement(&mut self, dx: f64, dz: f64) {
        let (mut a, mut b) = (dx, dz);
        for _ in 0..self.fourier {
            (a, b) = (b, -a);
        }
        self.x += a;
        self.z += b;
    }

    /// Re-expresses the frame against an ideal that gained `F^j`.
    /// Moving `F` inward maps `X(a) Z(b)` to `X(−b) Z(a)`.
    pub fn absorb_fourier(&mut self, j: u8) {
        for _ in 0..j % 4 {
            (self.x, self.z) = (-self.z, self.x);
            self.fourier = (self.fourier + 3) % 4;
        }
    }

    /// `ρ(q) = ±q`, the action of `F^k` on `q` for even `k`.
    pub fn reflects(&self) -> Result<bool, MbqcError> {
        match self.fourier {
            0 => Ok(false),
            2 => Ok(true),
            k => Err(MbqcError::FrameNotDiagonal(k)),
        }
    }

    pub fn tags(&self) -> Vec<Correction> {
        let mut t = Vec::new();
        if self.z != 0.0 {
            t.push(Correction::Z(self.z));
        }
        if self.x != 0.0 {
            t.push(Correction::X(self.x));
        }
        match self.fourier {
            1 => t.push(Correction::F),
            2 => t.push(Correction::Reflection),
            3 => t.push(Correction::FInv),
            _ => {}
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRecord {
    pub input: usize,
    pub output: usize,
    /// Corrections in application order.
    pub tags: Vec<Correction>,
}

/// Per-wire byproducts: `raw output = (∏ tags) · ideal output`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ByproductRecord {
    pub wires: Vec<WireRecord>,
}

impl ByproductRecord {
    pub fn gaussian_gates(&self) -> Vec<GaussianGate> {
        self.wires
            .iter()
            .flat_map(|w| w.tags.iter().flat_map(move |t| t.gaussian_gates(w.output)))
            .collect()
    }

    /// Gates that undo the record, in application order.
    pub fn inverse_gaussian_gates(&self) -> Vec<GaussianGate> {
        self.wires
            .iter()
            .flat_map(|w| {
                w.tags
                    .iter()
                    .rev()
                    .flat_map(move |t| t.inverse().gaussian_gates(w.output))
            })
            .collect()
    }

    pub fn exact_gates(&self) -> Result<Vec<Gate>, MbqcError> {
        let mut out = Vec::new();
        for w in &self.wires {
            for t in &w.tags {
                out.push(t.exact_gate(w.output)?);
            }
        }
        Ok(out)
    }

    pub fn inverse_exact_gates(&self) -> Result<Vec<Gate>, MbqcError> {
        let mut out = Vec::new();
        for w in &self.wires {
            for t in w.tags.iter().rev() {
                out.push(t.inverse().exact_gate(w.output)?);
            }
        }
        Ok(out)
    }

    /// The whole record as one op on modes carrying `labels`.
    pub fn symplectic(&self, labels: &[usize]) -> Result<SymplecticOp, MbqcError> {
        let mut op = SymplecticOp::identity(labels.len());
        for g in self.gaussian_gates() {
            op = op.then(&SymplecticOp::gate(&g, labels)?);
        }
        Ok(op)
    }

    pub fn undo_gaussian(&self, st: &GaussianState) -> Result<GaussianState, MbqcError> {
        Ok(st.apply_gates(&self.inverse_gaussian_gates())?)
    }

    pub fn undo_nullifiers(&self, ns: &NullifierSet) -> Result<NullifierSet, MbqcError> {
        Ok(ns.conjugate_all(&self.inverse_exact_gates()?)?)
    }
}

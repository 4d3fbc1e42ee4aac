use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::MbqcError;
use crate::graph::Graph;

/// `f(q) = c₀ + c₁ q + c₂ q² + c₃ q³`, stored as `[c₀, c₁, c₂, c₃]`.
///
/// A measurement with basis `f` reads `p̂_f = e^{−if(q)} p̂ e^{if(q)} = p̂ + f′(q̂)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly(pub [f64; 4]);

impl Poly {
    pub fn zero() -> Self {
        Poly([0.0; 4])
    }

    /// `exp(i s q^k / k)` for `k ∈ {1, 2, 3}`.
    pub fn monomial_gate(k: usize, s: f64) -> Option<Self> {
        let mut c = [0.0; 4];
        match k {
            1..=3 => c[k] = s / k as f64,
            _ => return None,
        }
        Some(Poly(c))
    }

    pub fn degree(&self) -> usize {
        (1..4).rev().find(|&k| self.0[k] != 0.0).unwrap_or(0)
    }

    pub fn is_gaussian(&self) -> bool {
        self.0[3] == 0.0
    }

    /// `q ↦ f(q + a)`.
    pub fn shifted(&self, a: f64) -> Self {
        let [c0, c1, c2, c3] = self.0;
        Poly([
            c0 + c1 * a + c2 * a * a + c3 * a * a * a,
            c1 + 2.0 * c2 * a + 3.0 * c3 * a * a,
            c2 + 3.0 * c3 * a,
            c3,
        ])
    }

    /// `q ↦ f(−q)`.
    pub fn reflected(&self) -> Self {
        let [c0, c1, c2, c3] = self.0;
        Poly([c0, -c1, c2, -c3])
    }

    /// Measured observable `p + slope + shear q` for a Gaussian basis.
    pub fn linear_part(&self) -> (f64, f64) {
        (self.0[1], 2.0 * self.0[2])
    }
}

impl std::fmt::Display for Poly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> = ["", " q", " q^2", " q^3"]
            .iter()
            .zip(self.0)
            .filter(|(_, c)| *c != 0.0)
            .map(|(m, c)| format!("{c}{m}"))
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

/// How a step reacts to displacement byproducts already on its wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptRule {
    /// Basis fixed in advance; any displacement mismatch becomes a recorded
    /// `Z` byproduct. Only valid for Gaussian steps.
    #[default]
    Fixed,
    /// Basis shifted by the pending `X` byproduct before measuring. For
    /// Gaussian steps this is classical post-processing of the result; for
    /// cubic steps it changes the physical basis.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramStep {
    pub mode: usize,
    /// Basis for a wire whose pending byproduct carries no displacement.
    pub poly: Poly,
    #[serde(default)]
    pub adapt: AdaptRule,
    /// Circuit Fouriers on this wire since the previous step, absorbed into
    /// the byproduct frame instead of measured.
    #[serde(default)]
    pub fourier: u8,
}

impl ProgramStep {
    pub fn transport(mode: usize) -> Self {
        ProgramStep {
            mode,
            poly: Poly::zero(),
            adapt: AdaptRule::Fixed,
            fourier: 0,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        self.poly.is_gaussian()
    }
}

/// Wires (node labels from input to output) and the measurement steps in
/// logical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementProgram {
    pub wires: Vec<Vec<usize>>,
    pub steps: Vec<ProgramStep>,
    /// Circuit Fouriers after the last step of each wire.
    #[serde(default)]
    pub output_fourier: Vec<u8>,
}

/// Where each node sits: wire index and position along it.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub site: BTreeMap<usize, (usize, usize)>,
    pub cross: Vec<(usize, usize)>,
}

impl MeasurementProgram {
    pub fn inputs(&self) -> Vec<usize> {
        self.wires.iter().map(|w| w[0]).collect()
    }

    pub fn outputs(&self) -> Vec<usize> {
        self.wires.iter().map(|w| *w.last().unwrap()).collect()
    }

    /// Checks the program against `g` and returns the wire layout.
    pub(crate) fn layout(&self, g: &Graph) -> Result<Layout, MbqcError> {
        let bad = |m: String| Err(MbqcError::InvalidProgram(m));
        let mut site = BTreeMap::new();
        for (w, nodes) in self.wires.iter().enumerate() {
            if nodes.is_empty() {
                return bad(format!("wire {} is empty", w + 1));
            }
            for (i, &v) in nodes.iter().enumerate() {
                if v == 0 || v > g.n() {
                    return bad(format!("node {v} is not a vertex"));
                }
                if site.insert(v, (w, i)).is_some() {
                    return bad(format!("node {v} lies on two wires"));
                }
                if i > 0 && !g.has_edge(nodes[i - 1], v) {
                    return bad(format!("wire {} misses edge {}-{v}", w + 1, nodes[i - 1]));
                }
            }
        }
        if site.len() != g.n() {
            return bad("every vertex must lie on a wire".into());
        }
        let mut cross = Vec::new();
        for &(a, b) in g.edges() {
            let (wa, ia) = site[&a];
            let (wb, ib) = site[&b];
            if wa == wb {
                if ia.abs_diff(ib) != 1 {
                    return bad(format!("edge {a}-{b} skips along wire {}", wa + 1));
                }
            } else {
                cross.push((a, b));
            }
        }
        let mut measured = BTreeSet::new();
        let mut next = vec![0usize; self.wires.len()];
        for st in &self.steps {
            let Some(&(w, i)) = site.get(&st.mode) else {
                return bad(format!("step measures unknown mode {}", st.mode));
            };
            if !measured.insert(st.mode) {
                return bad(format!("mode {} measured twice", st.mode));
            }
            if i + 1 == self.wires[w].len() {
                return bad(format!("mode {} is an output", st.mode));
            }
            if i != next[w] {
                return bad(format!("mode {} measured out of wire order", st.mode));
            }
            next[w] += 1;
            if st.fourier > 3 {
                return bad(format!(
                    "step on mode {} absorbs more than three Fouriers",
                    st.mode
                ));
            }
            if !st.poly.is_gaussian() && st.adapt == AdaptRule::Fixed {
                return bad(format!("cubic step on mode {} must be adaptive", st.mode));
            }
        }
        if !self.output_fourier.is_empty() && self.output_fourier.len() != self.wires.len() {
            return bad("output_fourier needs one entry per wire".into());
        }
        for (w, nodes) in self.wires.iter().enumerate() {
            if next[w] + 1 != nodes.len() {
                return Err(MbqcError::UnmeasuredMode(nodes[next[w]]));
            }
        }
        Ok(Layout { site, cross })
    }
}

/// Gates of the universal set, addressed by wire `1..=wires`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum CircuitGate {
    /// `exp(i s q^k / k)`, `k ∈ {1, 2, 3}`.
    Diagonal {
        wire: usize,
        k: usize,
        s: f64,
    },
    Fourier {
        wire: usize,
    },
    Cz {
        a: usize,
        b: usize,
    },
    /// A bare transport hop; acts as `F` on the wire.
    Identity {
        wire: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub wires: usize,
    pub gates: Vec<CircuitGate>,
}

/// Where circuit inputs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inputs {
    /// The input vertices themselves hold the inputs.
    OnCluster,
    /// Inputs are teleported onto the input vertices, leaving one `F` each.
    Teleported,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Brickwork {
    pub graph: Graph,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub program: MeasurementProgram,
}

struct Builder {
    nodes: usize,
    edges: Vec<(usize, usize)>,
    wires: Vec<Vec<usize>>,
    fourier: Vec<usize>,
    absorbed: Vec<u8>,
    steps: Vec<ProgramStep>,
}

impl Builder {
    fn hop(&mut self, w: usize, poly: Poly, adapt: AdaptRule) {
        let cur = *self.wires[w].last().unwrap();
        self.nodes += 1;
        self.edges.push((cur, self.nodes));
        self.wires[w].push(self.nodes);
        self.steps.push(ProgramStep {
            mode: cur,
            poly,
            adapt,
            fourier: self.absorbed[w],
        });
        self.absorbed[w] = 0;
        self.fourier[w] = (self.fourier[w] + 1) % 4;
    }

    fn absorb(&mut self, w: usize) {
        self.absorbed[w] = (self.absorbed[w] + 1) % 4;
        self.fourier[w] = (self.fourier[w] + 3) % 4;
    }

    fn pad_to(&mut self, w: usize, modulus: usize) {
        while self.fourier[w] % modulus != 0 {
            self.hop(w, Poly::zero(), AdaptRule::Fixed);
        }
    }
}

/// Lays out one wire per circuit line and one measured node per gate.
///
/// Each measured node acts as `X(m) F e^{if(q)}` on its wire, so the builder
/// tracks the Fourier power left over on every wire. Circuit Fouriers cancel
/// one power and need no node; the next step records them. A diagonal gate needs an even power (the basis
/// is reflected when it is `2 mod 4`); a CZ needs power `0 mod 4` on both
/// wires, with no circuit Fourier still waiting for a step. Transport hops
/// are inserted to reach those.
pub fn compile_brickwork(circuit: &Circuit, inputs: Inputs) -> Result<Brickwork, MbqcError> {
    let w = circuit.wires;
    if w == 0 {
        return Err(MbqcError::InvalidProgram("circuit has no wires".into()));
    }
    let start = match inputs {
        Inputs::OnCluster => 0,
        Inputs::Teleported => 1,
    };
    let mut b = Builder {
        nodes: w,
        edges: Vec::new(),
        wires: (1..=w).map(|v| vec![v]).collect(),
        fourier: vec![start; w],
        absorbed: vec![0; w],
        steps: Vec::new(),
    };
    let wire = |i: usize| {
        if i == 0 || i > w {
            Err(MbqcError::UnsupportedGate(format!("wire {i} out of range")))
        } else {
            Ok(i - 1)
        }
    };
    for gate in &circuit.gates {
        match *gate {
            CircuitGate::Diagonal { wire: i, k, s } => {
                let i = wire(i)?;
                let g = Poly::monomial_gate(k, s).ok_or_else(|| {
                    MbqcError::UnsupportedGate(format!("diagonal gate of degree {k}"))
                })?;
                b.pad_to(i, 2);
                let poly = if b.fourier[i] == 2 { g.reflected() } else { g };
                let adapt = if k == 3 {
                    AdaptRule::Adaptive
                } else {
                    AdaptRule::Fixed
                };
                b.hop(i, poly, adapt);
            }
            CircuitGate::Fourier { wire: i } => {
                b.absorb(wire(i)?);
            }
            CircuitGate::Identity { wire: i } => {
                let i = wire(i)?;
                b.hop(i, Poly::zero(), AdaptRule::Fixed);
                b.absorb(i);
            }
            CircuitGate::Cz { a, b: c } => {
                let (i, j) = (wire(a)?, wire(c)?);
                if i == j {
                    return Err(MbqcError::UnsupportedGate(format!("CZ on wire {a} twice")));
                }
                for k in [i, j] {
                    // Fouriers before the CZ must land on a step before it.
                    if b.absorbed[k] != 0 {
                        for _ in 0..4 {
                            b.hop(k, Poly::zero(), AdaptRule::Fixed);
                        }
                    }
                    b.pad_to(k, 4);
                }
                let (u, v) = (*b.wires[i].last().unwrap(), *b.wires[j].last().unwrap());
                if b.edges
                    .iter()
                    .any(|&(x, y)| (x, y) == (u, v) || (x, y) == (v, u))
                {
                    for _ in 0..4 {
                        b.hop(i, Poly::zero(), AdaptRule::Fixed);
                    }
                }
                let u = *b.wires[i].last().unwrap();
                b.edges.push((u, v));
            }
        }
    }
    let graph =
        Graph::new(b.nodes, &b.edges).map_err(|e| MbqcError::InvalidProgram(e.to_string()))?;
    let program = MeasurementProgram {
        wires: b.wires,
        steps: b.steps,
        output_fourier: b.absorbed,
    };
    Ok(Brickwork {
        inputs: program.inputs(),
        outputs: program.outputs(),
        graph,
        program,
    })
}

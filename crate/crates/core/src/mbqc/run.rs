use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::byproduct::{ByproductRecord, WireFrame, WireRecord};
use super::program::{AdaptRule, Circuit, CircuitGate, MeasurementProgram, Poly};
use super::MbqcError;
use crate::gaussian::{
    canonical_cluster, homodyne, homodyne_basis_of_shear, GaussianGate, GaussianState,
};
use crate::graph::Graph;
use crate::nullifier::{Gate, NullifierSet, Observable, Rational};

/// Resolution of sampled outcomes on the ideal backend.
const IDEAL_SAMPLE_GRID: f64 = 1024.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    /// Exact nullifier tracking for ideal (infinitely squeezed) clusters.
    Nullifier,
    /// Moments of a cluster built from `S(accuracy)|0⟩` inputs.
    Gaussian { accuracy: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BackendState {
    Nullifier(NullifierSet),
    Gaussian(GaussianState),
}

impl BackendState {
    pub fn cluster(g: &Graph, backend: Backend) -> Result<Self, MbqcError> {
        Ok(match backend {
            Backend::Nullifier => BackendState::Nullifier(NullifierSet::standard(g)),
            Backend::Gaussian { accuracy } => {
                BackendState::Gaussian(canonical_cluster(g, accuracy)?)
            }
        })
    }

    pub fn labels(&self) -> Vec<usize> {
        match self {
            BackendState::Nullifier(ns) => ns.labels().to_vec(),
            BackendState::Gaussian(st) => st.labels.clone(),
        }
    }

    fn tensor(&self, other: &BackendState) -> Result<Self, MbqcError> {
        match (self, other) {
            (BackendState::Nullifier(a), BackendState::Nullifier(b)) => {
                Ok(BackendState::Nullifier(a.tensor(b)?))
            }
            (BackendState::Gaussian(a), BackendState::Gaussian(b)) => {
                Ok(BackendState::Gaussian(a.tensor(b)?))
            }
            _ => Err(MbqcError::BackendMismatch),
        }
    }

    fn cz(&self, a: usize, b: usize) -> Result<Self, MbqcError> {
        Ok(match self {
            BackendState::Nullifier(ns) => {
                BackendState::Nullifier(ns.conjugate(&Gate::Cz { a, b })?)
            }
            BackendState::Gaussian(st) => {
                BackendState::Gaussian(st.apply_gate(&GaussianGate::Cz { a, b })?)
            }
        })
    }

    /// Measures `p + f′(q)` on `mode` and returns the state and the
    /// `(homodyne reading, value of p + f′(q))` pair.
    fn measure<R: Rng + ?Sized>(
        &self,
        mode: usize,
        basis: &Poly,
        forced: Option<f64>,
        rng: &mut R,
    ) -> Result<(Self, f64, f64), MbqcError> {
        let (slope, shear) = basis.linear_part();
        match self {
            BackendState::Gaussian(st) => {
                let (theta, scale) = homodyne_basis_of_shear(shear);
                let y = forced.map(|m| (m - slope) / scale);
                let res = homodyne(st, mode, theta, y, rng)?;
                Ok((
                    BackendState::Gaussian(res.state),
                    res.outcome,
                    scale * res.outcome + slope,
                ))
            }
            BackendState::Nullifier(ns) => {
                let m = forced.unwrap_or_else(|| {
                    let x: f64 = rng.sample(StandardNormal);
                    (x * IDEAL_SAMPLE_GRID).round() / IDEAL_SAMPLE_GRID
                });
                let exact = |v: f64| Rational::from_float(v).ok_or(MbqcError::NotFinite(v));
                let obs = if shear == 0.0 {
                    Observable::P
                } else {
                    Observable::PPlusSQ(exact(shear)?)
                };
                let meas = ns.measure(mode, &obs, &(exact(m)? - exact(slope)?))?;
                let reading = rational_f64(&meas.outcome);
                Ok((
                    BackendState::Nullifier(meas.state),
                    reading,
                    reading + slope,
                ))
            }
        }
    }
}

fn rational_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// One row of the outcome log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeEntry {
    pub step: usize,
    pub mode: usize,
    pub basis: String,
    /// Raw reading: the rotated homodyne quadrature, or `p + s q` on the
    /// ideal backend.
    pub outcome: f64,
    /// Value of `p + f′(q)`, after any adaptive correction.
    pub result: f64,
}

pub fn write_outcome_csv<W: Write>(log: &[OutcomeEntry], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in log {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramRun {
    /// Raw state of the unmeasured (output) modes.
    pub state: BackendState,
    pub record: ByproductRecord,
    pub log: Vec<OutcomeEntry>,
}

/// Run options: forced results per step in program order, and the physical
/// measurement order as a permutation of step indices.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub forced: Option<Vec<f64>>,
    pub order: Option<Vec<usize>>,
}

/// Input teleported onto the cluster: state plus the frame left on each
/// receiving vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Attached {
    pub state: BackendState,
    pub frames: BTreeMap<usize, WireFrame>,
    pub log: Vec<OutcomeEntry>,
}

/// CZ each input mode `u` to its cluster vertex `v`, then measure `p̂_u`.
/// Every `v` then holds `X(m) F` applied to its input.
pub fn attach_input<R: Rng + ?Sized>(
    cluster: &BackendState,
    input: &BackendState,
    pairing: &[(usize, usize)],
    forced: Option<&[f64]>,
    rng: &mut R,
) -> Result<Attached, MbqcError> {
    let (cl, il) = (cluster.labels(), input.labels());
    if let Some(f) = forced {
        if f.len() != pairing.len() {
            return Err(MbqcError::OutcomeCount {
                expected: pairing.len(),
                got: f.len(),
            });
        }
    }
    let us: BTreeSet<usize> = pairing.iter().map(|p| p.0).collect();
    let vs: BTreeSet<usize> = pairing.iter().map(|p| p.1).collect();
    if us.len() != pairing.len() || vs.len() != pairing.len() {
        return Err(MbqcError::InvalidProgram("pairing is not injective".into()));
    }
    if us != il.iter().copied().collect() || !vs.iter().all(|v| cl.contains(v)) {
        return Err(MbqcError::InvalidProgram(
            "pairing must cover the input and land on the cluster".into(),
        ));
    }
    let mut st = input.tensor(cluster)?;
    for &(u, v) in pairing {
        st = st.cz(u, v)?;
    }
    let mut frames = BTreeMap::new();
    let mut log = Vec::new();
    for (i, &(u, v)) in pairing.iter().enumerate() {
        let (next, outcome, result) = st.measure(u, &Poly::zero(), forced.map(|f| f[i]), rng)?;
        st = next;
        frames.insert(v, WireFrame::hop(result));
        log.push(OutcomeEntry {
            step: 0,
            mode: u,
            basis: "0".into(),
            outcome,
            result,
        });
    }
    Ok(Attached {
        state: st,
        frames,
        log,
    })
}

/// Builds the cluster for `g` and runs `program` on it.
pub fn run_program<R: Rng + ?Sized>(
    g: &Graph,
    program: &MeasurementProgram,
    backend: Backend,
    options: &RunOptions,
    rng: &mut R,
) -> Result<ProgramRun, MbqcError> {
    let st = BackendState::cluster(g, backend)?;
    execute_program(st, g, program, &BTreeMap::new(), options, rng)
}

/// Runs `program` on a prepared state whose input vertices may already carry
/// frames from [`attach_input`].
///
/// Gaussian bases never depend on earlier results, so the physical
/// measurements can happen in any order; the byproducts are then worked out
/// in program order from the recorded results.
pub fn execute_program<R: Rng + ?Sized>(
    state: BackendState,
    g: &Graph,
    program: &MeasurementProgram,
    initial: &BTreeMap<usize, WireFrame>,
    options: &RunOptions,
    rng: &mut R,
) -> Result<ProgramRun, MbqcError> {
    let layout = program.layout(g)?;
    let steps = &program.steps;
    if let Some((i, st)) = steps.iter().enumerate().find(|(_, s)| !s.is_gaussian()) {
        return Err(MbqcError::NonGaussianStep {
            step: i + 1,
            mode: st.mode,
        });
    }
    if let Some(f) = &options.forced {
        if f.len() != steps.len() {
            return Err(MbqcError::OutcomeCount {
                expected: steps.len(),
                got: f.len(),
            });
        }
    }
    let order: Vec<usize> = options
        .order
        .clone()
        .unwrap_or_else(|| (0..steps.len()).collect());
    let mut sorted = order.clone();
    sorted.sort_unstable();
    if sorted != (0..steps.len()).collect::<Vec<_>>() {
        return Err(MbqcError::InvalidProgram(
            "order is not a permutation of the steps".into(),
        ));
    }

    let mut st = state;
    let mut readings = vec![(0.0, 0.0); steps.len()];
    for &i in &order {
        let forced = options.forced.as_ref().map(|f| f[i]);
        let (next, outcome, result) = st.measure(steps[i].mode, &steps[i].poly, forced, rng)?;
        st = next;
        readings[i] = (outcome, result);
    }

    let mut frames: Vec<WireFrame> = program
        .wires
        .iter()
        .map(|w| initial.get(&w[0]).copied().unwrap_or_default())
        .collect();
    let mut at = vec![0usize; program.wires.len()];
    let mut pending: BTreeSet<(usize, usize)> = layout.cross.iter().copied().collect();
    let mut results = vec![0.0; steps.len()];

    let entangle =
        |frames: &mut Vec<WireFrame>, at: &[usize], a: usize, b: usize| -> Result<(), MbqcError> {
            let (wa, ia) = layout.site[&a];
            let (wb, ib) = layout.site[&b];
            if at[wa] != ia || at[wb] != ib {
                return Err(MbqcError::ProgramOrder(format!(
                    "CZ {a}-{b} crosses wires at different times"
                )));
            }
            let (fa, fb) = (frames[wa], frames[wb]);
            if fa.fourier != fb.fourier || fa.reflects().is_err() {
                return Err(MbqcError::FrameNotDiagonal(fa.fourier.max(fb.fourier)));
            }
            // CZ X_a(x) = X_a(x) Z_b(x) CZ
            frames[wa].z += fb.x;
            frames[wb].z += fa.x;
            Ok(())
        };

    for (i, step) in steps.iter().enumerate() {
        let (w, _) = layout.site[&step.mode];
        let incident: Vec<(usize, usize)> = pending
            .iter()
            .filter(|&&(a, b)| a == step.mode || b == step.mode)
            .copied()
            .collect();
        for (a, b) in incident {
            entangle(&mut frames, &at, a, b)?;
            pending.remove(&(a, b));
        }
        frames[w].absorb_fourier(step.fourier);
        let frame = &mut frames[w];
        let m = readings[i].1;
        let result = if step.poly.degree() == 0 {
            m
        } else {
            let sign = if frame.reflects()? { -1.0 } else { 1.0 };
            let gate = if sign < 0.0 {
                step.poly.reflected()
            } else {
                step.poly
            };
            // e^{ig(q)} X(x) = X(x) Z(δ) e^{ig(q)}
            let delta = gate.shifted(frame.x).0[1] - gate.0[1];
            match step.adapt {
                AdaptRule::Fixed => {
                    frame.z += delta;
                    m
                }
                AdaptRule::Adaptive => m - sign * delta,
            }
        };
        *frame = frame.after_hop(result);
        at[w] += 1;
        results[i] = result;
    }
    for (a, b) in std::mem::take(&mut pending) {
        entangle(&mut frames, &at, a, b)?;
    }
    for (w, &j) in program.output_fourier.iter().enumerate() {
        frames[w].absorb_fourier(j);
    }

    let log = order
        .iter()
        .map(|&i| OutcomeEntry {
            step: i + 1,
            mode: steps[i].mode,
            basis: steps[i].poly.to_string(),
            outcome: readings[i].0,
            result: results[i],
        })
        .collect();
    let record = ByproductRecord {
        wires: program
            .wires
            .iter()
            .zip(&frames)
            .map(|(w, f)| WireRecord {
                input: w[0],
                output: *w.last().unwrap(),
                tags: f.tags(),
            })
            .collect(),
    };
    Ok(ProgramRun {
        state: st,
        record,
        log,
    })
}

/// The circuit as Gaussian gates on modes `labels[wire − 1]`.
pub fn circuit_gaussian_gates(
    circuit: &Circuit,
    labels: &[usize],
) -> Result<Vec<GaussianGate>, MbqcError> {
    let mode = |w: usize| {
        labels
            .get(w.wrapping_sub(1))
            .copied()
            .ok_or_else(|| MbqcError::UnsupportedGate(format!("wire {w} out of range")))
    };
    let mut out = Vec::new();
    for g in &circuit.gates {
        match *g {
            CircuitGate::Diagonal { wire, k: 1, s } => out.push(GaussianGate::Z {
                mode: mode(wire)?,
                s,
            }),
            CircuitGate::Diagonal { wire, k: 2, s } => out.push(GaussianGate::Shear {
                mode: mode(wire)?,
                s,
            }),
            CircuitGate::Diagonal { k, .. } => {
                return Err(MbqcError::UnsupportedGate(format!(
                    "degree-{k} gate has no Gaussian form"
                )))
            }
            CircuitGate::Fourier { wire } | CircuitGate::Identity { wire } => {
                out.push(GaussianGate::fourier(mode(wire)?))
            }
            CircuitGate::Cz { a, b } => out.push(GaussianGate::Cz {
                a: mode(a)?,
                b: mode(b)?,
            }),
        }
    }
    Ok(out)
}

/// The circuit as exact gates on modes `labels[wire − 1]`.
pub fn circuit_exact_gates(circuit: &Circuit, labels: &[usize]) -> Result<Vec<Gate>, MbqcError> {
    let exact = |s: f64| Rational::from_float(s).ok_or(MbqcError::NotFinite(s));
    circuit_gaussian_gates(circuit, labels)?
        .into_iter()
        .map(|g| {
            Ok(match g {
                GaussianGate::Z { mode, s } => Gate::Z { mode, s: exact(s)? },
                GaussianGate::Shear { mode, s } => Gate::Shear { mode, s: exact(s)? },
                GaussianGate::Rotate { mode, .. } => Gate::Fourier { mode },
                GaussianGate::Cz { a, b } => Gate::Cz { a, b },
                other => return Err(MbqcError::UnsupportedGate(format!("{other:?}"))),
            })
        })
        .collect()
}

/// Nullifiers of the circuit applied to zero-momentum inputs on `labels`,
/// with modes stored in ascending label order.
pub fn ideal_nullifiers(circuit: &Circuit, labels: &[usize]) -> Result<NullifierSet, MbqcError> {
    let ns = NullifierSet::zero_momentum(labels.len()).relabeled(labels.to_vec())?;
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    Ok(ns
        .conjugate_all(&circuit_exact_gates(circuit, labels)?)?
        .reordered(&sorted)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::conditional_teleport_hop;
    use crate::mbqc::program::{compile_brickwork, Inputs, ProgramStep};
    use crate::nullifier::{int, QuadratureForm};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    fn forced(v: &[f64]) -> RunOptions {
        RunOptions {
            forced: Some(v.to_vec()),
            order: None,
        }
    }

    fn nullifier_state(run: &ProgramRun) -> &NullifierSet {
        match &run.state {
            BackendState::Nullifier(ns) => ns,
            _ => panic!("expected nullifiers"),
        }
    }

    fn gaussian_state(s: &BackendState) -> &GaussianState {
        match s {
            BackendState::Gaussian(st) => st,
            _ => panic!("expected a Gaussian state"),
        }
    }

    #[test]
    fn three_node_wire_ends_in_shifted_momentum() {
        let g = Graph::path(3).unwrap();
        let p = MeasurementProgram {
            wires: vec![vec![1, 2, 3]],
            steps: vec![ProgramStep::transport(1), ProgramStep::transport(2)],
            output_fourier: vec![],
        };
        let run = run_program(
            &g,
            &p,
            Backend::Nullifier,
            &forced(&[0.75, -0.5]),
            &mut rng(),
        )
        .unwrap();
        let want = NullifierSet::new(
            vec![3],
            vec![QuadratureForm::momentum_op(1, 0)
                .with_constant(Rational::from_float(-0.75).unwrap())],
        )
        .unwrap();
        assert!(nullifier_state(&run).same_state(&want));
        let ideal = ideal_nullifiers(
            &Circuit {
                wires: 1,
                gates: vec![
                    CircuitGate::Identity { wire: 1 },
                    CircuitGate::Identity { wire: 1 },
                ],
            },
            &[3],
        )
        .unwrap();
        let raw = ideal
            .conjugate_all(&run.record.exact_gates().unwrap())
            .unwrap();
        assert!(raw.same_state(nullifier_state(&run)));
    }

    fn mixed_circuit() -> Circuit {
        Circuit {
            wires: 2,
            gates: vec![
                CircuitGate::Diagonal {
                    wire: 1,
                    k: 2,
                    s: 0.5,
                },
                CircuitGate::Diagonal {
                    wire: 2,
                    k: 1,
                    s: -1.25,
                },
                CircuitGate::Cz { a: 1, b: 2 },
                CircuitGate::Fourier { wire: 1 },
                CircuitGate::Diagonal {
                    wire: 1,
                    k: 2,
                    s: -2.0,
                },
                CircuitGate::Diagonal {
                    wire: 2,
                    k: 2,
                    s: 0.75,
                },
                CircuitGate::Cz { a: 2, b: 1 },
            ],
        }
    }

    #[test]
    fn byproducts_explain_raw_output_exactly() {
        let c = mixed_circuit();
        let bw = compile_brickwork(&c, Inputs::OnCluster).unwrap();
        let n = bw.program.steps.len();
        let outcomes: Vec<f64> = (0..n).map(|i| 0.25 * i as f64 - 1.5).collect();
        for adapt in [AdaptRule::Fixed, AdaptRule::Adaptive] {
            let mut prog = bw.program.clone();
            prog.steps.iter_mut().for_each(|s| s.adapt = adapt);
            let run = run_program(
                &bw.graph,
                &prog,
                Backend::Nullifier,
                &forced(&outcomes),
                &mut rng(),
            )
            .unwrap();
            let ideal = ideal_nullifiers(&c, &bw.outputs).unwrap();
            let raw = ideal
                .conjugate_all(&run.record.exact_gates().unwrap())
                .unwrap();
            assert!(raw.same_state(nullifier_state(&run)), "{adapt:?}");
            assert!(run
                .record
                .undo_nullifiers(nullifier_state(&run))
                .unwrap()
                .same_state(&ideal));
        }
    }

    #[test]
    fn teleported_input_onto_one_node() {
        let s = 3.0;
        let input = GaussianState::vacuum(1)
            .unwrap()
            .apply_gates(&[
                GaussianGate::Squeeze { mode: 1, s: 1.7 },
                GaussianGate::Rotate {
                    mode: 1,
                    theta: 0.4,
                },
                GaussianGate::X { mode: 1, s: 0.3 },
            ])
            .unwrap();
        let mut moved = input.clone();
        moved.labels = vec![9];
        let cluster = BackendState::cluster(
            &Graph::edgeless(1).unwrap(),
            Backend::Gaussian { accuracy: s },
        )
        .unwrap();
        for m in [0.0, 1.1] {
            let att = attach_input(
                &cluster,
                &BackendState::Gaussian(moved.clone()),
                &[(9, 1)],
                Some(&[m]),
                &mut rng(),
            )
            .unwrap();
            let oracle = conditional_teleport_hop(&input, s, m).unwrap();
            let got = gaussian_state(&att.state);
            assert!(
                (&got.mean - &oracle.mean).amax() < 1e-10
                    && (&got.cov - &oracle.cov).amax() < 1e-10
            );
            let tags = att.frames[&1].tags();
            if m == 0.0 {
                assert_eq!(tags, vec![super::super::Correction::F]);
            }
        }
    }

    #[test]
    fn attached_wires_factorise() {
        let bw = compile_brickwork(
            &Circuit {
                wires: 2,
                gates: vec![
                    CircuitGate::Diagonal {
                        wire: 1,
                        k: 2,
                        s: 1.5,
                    },
                    CircuitGate::Diagonal {
                        wire: 2,
                        k: 1,
                        s: 0.5,
                    },
                ],
            },
            Inputs::Teleported,
        )
        .unwrap();
        let cluster = BackendState::cluster(&bw.graph, Backend::Nullifier).unwrap();
        let input = NullifierSet::new(
            vec![20, 21],
            vec![
                QuadratureForm::position_op(2, 0).with_constant(int(-1)),
                QuadratureForm::momentum_op(2, 1).with_q(1, int(2)),
            ],
        )
        .unwrap();
        let att = attach_input(
            &cluster,
            &BackendState::Nullifier(input.clone()),
            &[(20, 1), (21, 2)],
            Some(&[0.5, -0.25]),
            &mut rng(),
        )
        .unwrap();
        let outcomes = vec![0.125; bw.program.steps.len()];
        let run = execute_program(
            att.state,
            &bw.graph,
            &bw.program,
            &att.frames,
            &forced(&outcomes),
            &mut rng(),
        )
        .unwrap();
        assert_eq!(run.record.wires.len(), 2);
        let ideal = input
            .relabeled(bw.outputs.clone())
            .unwrap()
            .conjugate_all(
                &circuit_exact_gates(
                    &Circuit {
                        wires: 2,
                        gates: vec![
                            CircuitGate::Diagonal {
                                wire: 1,
                                k: 2,
                                s: 1.5,
                            },
                            CircuitGate::Diagonal {
                                wire: 2,
                                k: 1,
                                s: 0.5,
                            },
                        ],
                    },
                    &bw.outputs,
                )
                .unwrap(),
            )
            .unwrap();
        let mut sorted = bw.outputs.clone();
        sorted.sort_unstable();
        let ideal = ideal.reordered(&sorted).unwrap();
        assert!(run
            .record
            .undo_nullifiers(nullifier_state(&run))
            .unwrap()
            .same_state(&ideal));
    }

    #[test]
    fn measurement_order_does_not_matter() {
        let bw = compile_brickwork(&mixed_circuit(), Inputs::OnCluster).unwrap();
        let n = bw.program.steps.len();
        let outcomes: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let base = run_program(
            &bw.graph,
            &bw.program,
            Backend::Gaussian { accuracy: 4.0 },
            &forced(&outcomes),
            &mut rng(),
        )
        .unwrap();
        let rev = RunOptions {
            forced: Some(outcomes.clone()),
            order: Some((0..n).rev().collect()),
        };
        let other = run_program(
            &bw.graph,
            &bw.program,
            Backend::Gaussian { accuracy: 4.0 },
            &rev,
            &mut rng(),
        )
        .unwrap();
        let (a, b) = (gaussian_state(&base.state), gaussian_state(&other.state));
        assert_eq!(a.labels, b.labels);
        assert!((&a.mean - &b.mean).amax() < 1e-9 && (&a.cov - &b.cov).amax() < 1e-9);
        assert_eq!(base.record, other.record);
    }

    #[test]
    fn cubic_steps_need_a_delegate() {
        let bw = compile_brickwork(
            &Circuit {
                wires: 1,
                gates: vec![CircuitGate::Diagonal {
                    wire: 1,
                    k: 3,
                    s: 0.3,
                }],
            },
            Inputs::OnCluster,
        )
        .unwrap();
        let err = run_program(
            &bw.graph,
            &bw.program,
            Backend::Gaussian { accuracy: 2.0 },
            &RunOptions::default(),
            &mut rng(),
        );
        assert_eq!(
            err.unwrap_err(),
            MbqcError::NonGaussianStep { step: 1, mode: 1 }
        );
    }

    #[test]
    fn wrong_outcome_count() {
        let g = Graph::path(2).unwrap();
        let p = MeasurementProgram {
            wires: vec![vec![1, 2]],
            steps: vec![ProgramStep::transport(1)],
            output_fourier: vec![],
        };
        let err =
            run_program(&g, &p, Backend::Nullifier, &forced(&[1.0, 2.0]), &mut rng()).unwrap_err();
        assert_eq!(
            err,
            MbqcError::OutcomeCount {
                expected: 1,
                got: 2
            }
        );
    }

    #[test]
    fn sampled_ideal_outcomes_are_dyadic() {
        let g = Graph::path(2).unwrap();
        let p = MeasurementProgram {
            wires: vec![vec![1, 2]],
            steps: vec![ProgramStep::transport(1)],
            output_fourier: vec![],
        };
        let run = run_program(
            &g,
            &p,
            Backend::Nullifier,
            &RunOptions::default(),
            &mut rng(),
        )
        .unwrap();
        let m = run.log[0].result;
        assert_eq!((m * IDEAL_SAMPLE_GRID).fract(), 0.0);
        let mut buf = Vec::new();
        write_outcome_csv(&run.log, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("step,mode,basis,outcome,result"));
    }

    fn gate_strategy(wires: usize) -> impl Strategy<Value = CircuitGate> {
        let dyadic = (-16i32..=16).prop_map(|k| k as f64 / 8.0);
        prop_oneof![
            (1..=wires, 1usize..=2, dyadic).prop_map(|(wire, k, s)| CircuitGate::Diagonal {
                wire,
                k,
                s
            }),
            (1..=wires).prop_map(|wire| CircuitGate::Fourier { wire }),
            (1..=wires).prop_map(|wire| CircuitGate::Identity { wire }),
            (1..=wires, 1..=wires)
                .prop_filter("distinct wires", |(a, b)| a != b)
                .prop_map(|(a, b)| CircuitGate::Cz { a, b }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn random_circuits_match_ideal_up_to_byproducts(
            gates in proptest::collection::vec(gate_strategy(3), 0..10),
            seed in 0u64..1000,
        ) {
            let c = Circuit { wires: 3, gates };
            let bw = compile_brickwork(&c, Inputs::OnCluster).unwrap();
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let run = run_program(&bw.graph, &bw.program, Backend::Nullifier, &RunOptions::default(), &mut r).unwrap();
            let ideal = ideal_nullifiers(&c, &bw.outputs).unwrap();
            prop_assert!(run.record.undo_nullifiers(nullifier_state(&run)).unwrap().same_state(&ideal));
        }
    }
}

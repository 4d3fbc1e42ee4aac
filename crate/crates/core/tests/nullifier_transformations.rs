use cvcluster::nullifier::{int, ratio, Gate, Observable, QuadratureForm, Rational};
use cvcluster::{Graph, NullifierSet};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shortened(m2: &Rational, m3: &Rational) -> NullifierSet {
    let ns = NullifierSet::standard(&Graph::path(4).unwrap());
    let a = ns.measure(2, &Observable::P, m2).unwrap().state;
    a.measure(3, &Observable::P, m3).unwrap().state
}

#[test]
fn wire_shortening_golden() {
    let (m2, m3) = (ratio(5, 3), ratio(-2, 7));
    let out = shortened(&m2, &m3);
    assert_eq!(out.labels(), &[1, 4]);
    // m2 − p4 − q1 and m3 − p1 − q4
    let expect = NullifierSet::new(
        vec![1, 4],
        vec![
            QuadratureForm::zero(2)
                .with_q(0, int(-1))
                .with_p(1, int(-1))
                .with_constant(m2.clone()),
            QuadratureForm::zero(2)
                .with_p(0, int(-1))
                .with_q(1, int(-1))
                .with_constant(m3.clone()),
        ],
    )
    .unwrap();
    assert!(out.same_state(&expect), "{out}");
}

#[test]
fn shortened_wire_is_a_corrected_two_node_graph() {
    let (m2, m3) = (ratio(1, 2), ratio(3, 4));
    let out = shortened(&m2, &m3);
    let rec = out.graph_from_nullifiers();
    assert_eq!(rec.graph(), Some(&Graph::path(2).unwrap()));
    assert!(rec.corrections().iter().any(|c| c.reflection));
    let gates: Vec<Gate> = rec.corrections().iter().flat_map(|c| c.gates()).collect();
    let rebuilt = NullifierSet::standard(&Graph::path(2).unwrap())
        .relabeled(vec![1, 4])
        .unwrap()
        .conjugate_all(&gates)
        .unwrap();
    assert!(rebuilt.same_state(&out));
}

fn removal_recovers_subgraph(g: &Graph, m: &Rational) {
    for v in 1..=g.n() {
        let after = NullifierSet::standard(g)
            .measure(v, &Observable::Q, m)
            .unwrap()
            .state;
        let rec = after.graph_from_nullifiers();
        assert_eq!(
            rec.graph(),
            Some(&g.remove_vertex(v).unwrap()),
            "graph {g}, vertex {v}"
        );
    }
}

#[test]
fn vertex_removal_on_all_small_graphs() {
    for n in 2..=4 {
        for g in Graph::enumerate_all(n) {
            removal_recovers_subgraph(&g, &ratio(-3, 5));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]
    #[test]
    fn vertex_removal_recovers_subgraph(seed in any::<u64>(), n in 2usize..=8, p in 0.1f64..0.9, num in -20i64..20) {
        let g = Graph::random(n, p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        removal_recovers_subgraph(&g, &ratio(num, 4));
    }
}

//! Unweighted simple graphs over qumode labels.
//!
//! Vertices are labelled `1..=n` everywhere in the public API, matching the
//! usual `v_1 .. v_n` numbering of graph states. Internally the adjacency is
//! stored 0-based.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) references a vertex outside 1..={2}")]
    OutOfRange(usize, usize, usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("lattice dimensions must be positive, got {0}x{1}")]
    ZeroDimension(usize, usize),
    #[error("periodic lattice needs at least 3 rows and 3 columns, got {0}x{1}")]
    TorusTooSmall(usize, usize),
}

/// A simple undirected graph. Immutable once built.
///
/// Edges are stored as 1-based `(i, j)` pairs with `i < j`, sorted
/// lexicographically. Equality is label-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

/// On-disk form: `{"n": 3, "edges": [[1, 2], [2, 3]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphFile> for Graph {
    type Error = GraphError;

    fn try_from(file: GraphFile) -> Result<Self, Self::Error> {
        let pairs: Vec<(usize, usize)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::new(file.n, &pairs)
    }
}

impl From<Graph> for GraphFile {
    fn from(g: Graph) -> Self {
        GraphFile {
            n: g.n,
            edges: g.edges.iter().map(|&(i, j)| [i, j]).collect(),
        }
    }
}

impl Graph {
    /// Builds a graph on `n` vertices from 1-based edge pairs.
    ///
    /// Pairs are unordered; `(2, 1)` and `(1, 2)` name the same edge, so
    /// listing both is a duplicate.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = BTreeSet::new();
        for &(a, b) in edges {
            if a == 0 || b == 0 || a > n || b > n {
                return Err(GraphError::OutOfRange(a, b, n));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge(a, b));
            }
        }
        Ok(Self::from_canonical(n, seen.into_iter().collect()))
    }

    fn from_canonical(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            neighbors[i - 1].push(j);
            neighbors[j - 1].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Graph {
            n,
            edges,
            neighbors,
        }
    }

    /// `n` isolated vertices.
    pub fn edgeless(n: usize) -> Result<Self, GraphError> {
        Graph::new(n, &[])
    }

    /// Linear graph `1 - 2 - ... - n`.
    pub fn path(n: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (1..n).map(|i| (i, i + 1)).collect();
        Graph::new(n, &edges)
    }

    /// Finite square lattice with nearest-neighbour edges, numbered row-major:
    /// vertex `(r, c)` (0-based) gets label `r * cols + c + 1`.
    pub fn square_lattice(rows: usize, cols: usize) -> Result<Self, GraphError> {
        if rows == 0 || cols == 0 {
            return Err(GraphError::ZeroDimension(rows, cols));
        }
        let label = |r: usize, c: usize| r * cols + c + 1;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((label(r, c), label(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((label(r, c), label(r + 1, c)));
                }
            }
        }
        Graph::new(rows * cols, &edges)
    }

    /// Square lattice with periodic boundaries (a torus). Every vertex has
    /// degree 4 and there are exactly two edges per vertex.
    pub fn square_torus(rows: usize, cols: usize) -> Result<Self, GraphError> {
        if rows < 3 || cols < 3 {
            return Err(GraphError::TorusTooSmall(rows, cols));
        }
        let label = |r: usize, c: usize| r * cols + c + 1;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                edges.push((label(r, c), label(r, (c + 1) % cols)));
                edges.push((label(r, c), label((r + 1) % rows, c)));
            }
        }
        Graph::new(rows * cols, &edges)
    }

    /// Erdős–Rényi sample: each of the `n(n-1)/2` pairs present with probability `p`.
    pub fn random<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for i in 1..=n {
            for j in i + 1..=n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        Graph::new(n, &edges)
    }

    /// Every labelled simple graph on `n` vertices (there are `2^(n(n-1)/2)`).
    pub fn enumerate_all(n: usize) -> impl Iterator<Item = Graph> {
        let pairs: Vec<(usize, usize)> = (1..=n)
            .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
            .collect();
        let count = 1u64 << pairs.len();
        (0..count).map(move |mask| {
            let edges = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            Graph::from_canonical(n, edges)
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Canonical 1-based edge list, `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted 1-based neighbour labels of vertex `v`.
    ///
    /// # Panics
    /// If `v` is not in `1..=n`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v - 1]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a >= 1 && a <= self.n && self.neighbors[a - 1].binary_search(&b).is_ok()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_regular(&self) -> bool {
        let d = self.degree(1);
        self.neighbors.iter().all(|l| l.len() == d)
    }

    /// Symmetric 0/1 adjacency matrix with zero diagonal.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a[(i - 1, j - 1)] = 1.0;
            a[(j - 1, i - 1)] = 1.0;
        }
        a
    }

    /// Connected components as sorted label lists, ordered by smallest label.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 1..=self.n {
            if seen[start - 1] {
                continue;
            }
            let mut comp = vec![start];
            seen[start - 1] = true;
            let mut k = 0;
            while k < comp.len() {
                let v = comp[k];
                for &w in self.neighbors(v) {
                    if !seen[w - 1] {
                        seen[w - 1] = true;
                        comp.push(w);
                    }
                }
                k += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Removes vertex `v` and its edges. Remaining vertices keep their
    /// relative order and are relabelled to `1..=n-1`.
    pub fn remove_vertex(&self, v: usize) -> Result<Graph, GraphError> {
        if v == 0 || v > self.n {
            return Err(GraphError::OutOfRange(v, v, self.n));
        }
        let relabel = |u: usize| if u > v { u - 1 } else { u };
        let edges: Vec<_> = self
            .edges
            .iter()
            .filter(|&&(i, j)| i != v && j != v)
            .map(|&(i, j)| (relabel(i), relabel(j)))
            .collect();
        Graph::new(self.n - 1, &edges)
    }

    /// Subgraph induced on `labels` (any order), relabelled by position in
    /// `labels` so that `labels[k]` becomes vertex `k + 1`.
    pub fn induced(&self, labels: &[usize]) -> Result<Graph, GraphError> {
        let mut edges = Vec::new();
        for (a, &u) in labels.iter().enumerate() {
            for (b, &w) in labels.iter().enumerate().skip(a + 1) {
                if self.has_edge(u, w) {
                    edges.push((a + 1, b + 1));
                }
            }
        }
        Graph::new(labels.len(), &edges)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, edges=[", self.n)?;
        for (k, (i, j)) in self.edges.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}-{j}")?;
        }
        write!(f, "])")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_three_node() {
        let g = Graph::new(3, &[(1, 2), (2, 3)]).unwrap();
        assert_eq!(g.edges(), &[(1, 2), (2, 3)]);
        assert_eq!(g, Graph::path(3).unwrap());
        assert_eq!(g.max_degree(), 2);
    }

    #[test]
    fn single_vertex_and_edgeless() {
        let g = Graph::new(1, &[]).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.max_degree(), 0);
        assert_eq!(
            Graph::edgeless(4).unwrap().adjacency_matrix(),
            DMatrix::zeros(4, 4)
        );
    }

    #[test]
    fn validation_errors_name_the_pair() {
        assert_eq!(
            Graph::new(2, &[(1, 2), (2, 1)]),
            Err(GraphError::DuplicateEdge(2, 1))
        );
        assert_eq!(Graph::new(3, &[(2, 2)]), Err(GraphError::SelfLoop(2)));
        assert_eq!(
            Graph::new(3, &[(1, 4)]),
            Err(GraphError::OutOfRange(1, 4, 3))
        );
        assert_eq!(
            Graph::new(3, &[(0, 1)]),
            Err(GraphError::OutOfRange(0, 1, 3))
        );
        assert_eq!(Graph::new(0, &[]), Err(GraphError::Empty));
    }

    #[test]
    fn lattices() {
        let g = Graph::square_lattice(2, 2).unwrap();
        assert_eq!((g.n(), g.edge_count()), (4, 4));
        let g = Graph::square_lattice(3, 3).unwrap();
        assert_eq!(g.max_degree(), 4);
        assert_eq!(g.degree(5), 4);
        assert_eq!(
            Graph::square_lattice(1, 4).unwrap(),
            Graph::path(4).unwrap()
        );
        assert_eq!(
            Graph::square_lattice(0, 3),
            Err(GraphError::ZeroDimension(0, 3))
        );
        let t = Graph::square_torus(4, 5).unwrap();
        assert!(t.is_regular());
        assert_eq!(t.max_degree(), 4);
        assert_eq!(t.edge_count(), 2 * t.n());
    }

    #[test]
    fn adjacency_shapes() {
        let a = Graph::path(2).unwrap().adjacency_matrix();
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let a = Graph::path(3).unwrap().adjacency_matrix();
        assert_eq!(
            a,
            DMatrix::from_row_slice(3, 3, &[0., 1., 0., 1., 0., 1., 0., 1., 0.])
        );
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(Graph::enumerate_all(1).count(), 1);
        assert_eq!(Graph::enumerate_all(3).count(), 8);
        assert_eq!(Graph::enumerate_all(4).count(), 64);
    }

    #[test]
    fn remove_vertex_relabels() {
        let g = Graph::path(4).unwrap();
        let h = g.remove_vertex(2).unwrap();
        assert_eq!(h, Graph::new(3, &[(2, 3)]).unwrap());
        assert_eq!(g.induced(&[1, 3, 4]).unwrap(), h);
    }

    #[test]
    fn json_round_trip_and_rejects_bad_input() {
        let g: Graph = serde_json::from_str(r#"{"n": 3, "edges": [[2, 1], [3, 2]]}"#).unwrap();
        assert_eq!(g, Graph::path(3).unwrap());
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"n":3,"edges":[[1,2],[2,3]]}"#);
        assert!(serde_json::from_str::<Graph>(r#"{"n": 2, "edges": [[1, 1]]}"#).is_err());
    }

    proptest::proptest! {
        #[test]
        fn adjacency_invariants(n in 1usize..9, p in 0.0f64..1.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Graph::random(n, p, &mut rng).unwrap();
            let a = g.adjacency_matrix();
            proptest::prop_assert_eq!(&a, &a.transpose());
            for i in 0..n {
                proptest::prop_assert_eq!(a[(i, i)], 0.0);
            }
            let max_row = (0..n).map(|i| a.row(i).sum() as usize).max().unwrap();
            proptest::prop_assert_eq!(max_row, g.max_degree());
            for v in 1..=n {
                if n > 1 {
                    let h = g.remove_vertex(v).unwrap();
                    proptest::prop_assert_eq!(h.n(), n - 1);
                    proptest::prop_assert_eq!(h.edge_count(), g.edge_count() - g.degree(v));
                }
            }
        }
    }
}

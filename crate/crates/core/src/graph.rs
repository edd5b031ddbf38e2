//! Weighted digraphs, Laplacians, connectivity/balance predicates, periodic
//! switching schedules, and the neighbor-averaging consensus input.
//!
//! Convention: `adj[(i, j)]` is the weight with which node `i` receives
//! information from node `j`, and the Laplacian is `L = D - adj` with
//! `D = diag(row sums)`, so the consensus flow is `dz/dt = -L z`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Balance and symmetry comparisons are scaled by the largest edge weight.
const WEIGHT_TOL: f64 = 1e-12;

/// Immutable weighted digraph over `n >= 1` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    n: usize,
    adj: DMatrix<f64>,
}

impl Digraph {
    /// Builds a digraph from its receive-weight matrix.
    ///
    /// Rejects non-square matrices, negative weights, nonzero diagonals, and
    /// empty node sets.
    pub fn new(adj: DMatrix<f64>) -> Result<Self> {
        let n = adj.nrows();
        if n == 0 || adj.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "adjacency must be square and nonempty, got {}x{}",
                adj.nrows(),
                adj.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = adj[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidScenario(format!(
                        "edge weight ({i}, {j}) = {w} must be finite and nonnegative"
                    )));
                }
                if i == j && w != 0.0 {
                    return Err(Error::InvalidScenario(format!(
                        "self-weight at node {i} must be zero"
                    )));
                }
            }
        }
        Ok(Self { n, adj })
    }

    /// Builds a digraph from `(from, to, weight)` edges, where `to` receives
    /// information from `from`.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj = DMatrix::zeros(n.max(1), n.max(1));
        if n == 0 {
            return Err(Error::DimensionMismatch(
                "graph needs at least one node".into(),
            ));
        }
        for &(from, to, w) in edges {
            if from >= n || to >= n {
                return Err(Error::InvalidScenario(format!(
                    "edge ({from} -> {to}) references a node outside 0..{n}"
                )));
            }
            adj[(to, from)] += w;
        }
        Self::new(adj)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.adj
    }

    fn max_weight(&self) -> f64 {
        self.adj.iter().fold(0.0_f64, |m, &w| m.max(w))
    }

    /// In-weighted Laplacian `L = D - adj`; every row sums to zero.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut lap = -self.adj.clone();
        for i in 0..self.n {
            lap[(i, i)] = self.adj.row(i).sum();
        }
        lap
    }

    /// Nodes reachable from `start` over nonzero weights, following receive
    /// edges forward (`transpose = false`: from j into its listeners) or
    /// backward.
    #[allow(clippy::needless_range_loop)]
    fn reach_count(&self, start: usize, transpose: bool) -> usize {
        let mut seen = vec![false; self.n];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for w in 0..self.n {
                let weight = if transpose {
                    self.adj[(w, u)]
                } else {
                    self.adj[(u, w)]
                };
                if weight > 0.0 && !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count
    }

    /// True iff the weight matrix is symmetric and the graph is connected.
    pub fn is_undirected_connected(&self) -> bool {
        let tol = WEIGHT_TOL * self.max_weight();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if (self.adj[(i, j)] - self.adj[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        self.reach_count(0, false) == self.n
    }

    /// True iff every node reaches every node over directed nonzero-weight
    /// paths and weighted in-degree equals weighted out-degree at each node.
    pub fn is_strongly_connected_balanced(&self) -> bool {
        if self.reach_count(0, false) != self.n || self.reach_count(0, true) != self.n {
            return false;
        }
        let tol = WEIGHT_TOL * self.max_weight();
        (0..self.n).all(|i| (self.adj.row(i).sum() - self.adj.column(i).sum()).abs() <= tol)
    }

    /// Neighbor-averaging input `(1/weight) * sum_j a_ij (z_j - z_i)`.
    pub fn consensus_input(&self, z: &DVector<f64>, i: usize, weight: f64) -> f64 {
        assert!(weight > 0.0, "consensus weight must be positive");
        assert_eq!(z.len(), self.n, "z length must match node count");
        let zi = z[i];
        let mut sum = 0.0;
        for j in 0..self.n {
            let a = self.adj[(i, j)];
            if a != 0.0 {
                sum += a * (z[j] - zi);
            }
        }
        sum / weight
    }
}

/// Periodic assignment of time segments to graphs from a finite set.
///
/// Each segment lasts `dwell`; the full cycle spans `dwell * order.len()`.
#[derive(Debug, Clone)]
pub struct SwitchingSchedule {
    graphs: Vec<Digraph>,
    order: Vec<usize>,
    dwell: f64,
}

impl SwitchingSchedule {
    /// Validates that all graphs share a node count and pass the strongly
    /// connected + balanced predicate, and that the order indices are valid.
    pub fn new(graphs: Vec<Digraph>, order: Vec<usize>, dwell: f64) -> Result<Self> {
        if graphs.is_empty() || order.is_empty() {
            return Err(Error::InvalidScenario(
                "switching schedule needs at least one graph and one segment".into(),
            ));
        }
        if !(dwell > 0.0 && dwell.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "segment duration must be positive, got {dwell}"
            )));
        }
        let n = graphs[0].node_count();
        for (idx, g) in graphs.iter().enumerate() {
            if g.node_count() != n {
                return Err(Error::DimensionMismatch(format!(
                    "graph {idx} has {} nodes, expected {n}",
                    g.node_count()
                )));
            }
            if !g.is_strongly_connected_balanced() {
                return Err(Error::InvalidScenario(format!(
                    "graph {idx} in the schedule is not strongly connected and balanced"
                )));
            }
        }
        for &k in &order {
            if k >= graphs.len() {
                return Err(Error::InvalidScenario(format!(
                    "segment order references graph {k}, but only {} are listed",
                    graphs.len()
                )));
            }
        }
        Ok(Self {
            graphs,
            order,
            dwell,
        })
    }

    /// A degenerate single-graph schedule.
    pub fn fixed(graph: Digraph) -> Self {
        Self {
            graphs: vec![graph],
            order: vec![0],
            dwell: 1.0,
        }
    }

    pub fn graphs(&self) -> &[Digraph] {
        &self.graphs
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn dwell(&self) -> f64 {
        self.dwell
    }

    pub fn node_count(&self) -> usize {
        self.graphs[0].node_count()
    }

    /// Full cycle length.
    pub fn period(&self) -> f64 {
        self.dwell * self.order.len() as f64
    }

    /// Graph active at time `t`; right-continuous at switch instants.
    pub fn active_graph(&self, t: f64) -> &Digraph {
        let period = self.period();
        let mut rem = t % period;
        if rem < 0.0 {
            rem += period;
        }
        // Rounding at rem ~ period could step past the last segment.
        let idx = ((rem / self.dwell) as usize).min(self.order.len() - 1);
        &self.graphs[self.order[idx]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    /// Bidirected 4-node path 1-2-3-4, unit weights.
    pub(crate) fn path4() -> Digraph {
        Digraph::from_edges(
            4,
            &[
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 2, 1.0),
                (2, 1, 1.0),
                (2, 3, 1.0),
                (3, 2, 1.0),
            ],
        )
        .unwrap()
    }

    /// Unidirectional 4-ring where node 0 receives from node 1, 1 from 2,
    /// 2 from 3, and 3 from 0.
    pub(crate) fn ring4() -> Digraph {
        Digraph::from_edges(4, &[(1, 0, 1.0), (2, 1, 1.0), (3, 2, 1.0), (0, 3, 1.0)]).unwrap()
    }

    #[test]
    fn laplacian_of_path_graph() {
        let lap = path4().laplacian();
        let expected = dmatrix![
            1.0, -1.0, 0.0, 0.0;
            -1.0, 2.0, -1.0, 0.0;
            0.0, -1.0, 2.0, -1.0;
            0.0, 0.0, -1.0, 1.0
        ];
        assert_eq!(lap, expected);
    }

    #[test]
    fn laplacian_of_single_node() {
        let g = Digraph::new(DMatrix::zeros(1, 1)).unwrap();
        assert_eq!(g.laplacian(), DMatrix::zeros(1, 1));
    }

    #[test]
    fn laplacian_of_ring_is_identity_minus_cycle() {
        let lap = ring4().laplacian();
        let mut expected = DMatrix::identity(4, 4);
        // receive relation: 0<-1, 1<-2, 2<-3, 3<-0
        expected[(0, 1)] = -1.0;
        expected[(1, 2)] = -1.0;
        expected[(2, 3)] = -1.0;
        expected[(3, 0)] = -1.0;
        assert_eq!(lap, expected);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        for g in [path4(), ring4()] {
            let lap = g.laplacian();
            for i in 0..4 {
                assert!(lap.row(i).sum().abs() < 1e-15);
            }
        }
    }

    #[test]
    fn undirected_connected_predicate() {
        assert!(path4().is_undirected_connected());
        assert!(!ring4().is_undirected_connected());
        let isolated = Digraph::new(DMatrix::zeros(2, 2)).unwrap();
        assert!(!isolated.is_undirected_connected());
    }

    #[test]
    fn strongly_connected_balanced_predicate() {
        assert!(ring4().is_strongly_connected_balanced());
        assert!(path4().is_strongly_connected_balanced());
        let chain = Digraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert!(!chain.is_strongly_connected_balanced());
    }

    #[test]
    fn symmetric_connected_implies_balanced_strongly_connected() {
        // directed star with symmetric weights
        let g = Digraph::from_edges(
            4,
            &[
                (0, 1, 0.5),
                (1, 0, 0.5),
                (0, 2, 2.0),
                (2, 0, 2.0),
                (0, 3, 1.0),
                (3, 0, 1.0),
            ],
        )
        .unwrap();
        assert!(g.is_undirected_connected());
        assert!(g.is_strongly_connected_balanced());
    }

    #[test]
    fn consensus_input_on_ring() {
        let g = ring4();
        let z = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        // node 0 receives only from node 1 (z = 2)
        assert_eq!(g.consensus_input(&z, 0, 1.0), 1.0);
    }

    #[test]
    fn consensus_input_is_zero_at_consensus() {
        let z = DVector::from_element(4, 3.25);
        for g in [path4(), ring4()] {
            for i in 0..4 {
                assert_eq!(g.consensus_input(&z, i, 1.0), 0.0);
            }
        }
    }

    #[test]
    fn consensus_input_weight_divides() {
        let g = path4();
        let z = DVector::from_vec(vec![1.0, -2.0, 0.5, 4.0]);
        for i in 0..4 {
            let unweighted = g.consensus_input(&z, i, 1.0);
            assert_eq!(g.consensus_input(&z, i, 2.0), unweighted / 2.0);
        }
    }

    #[test]
    fn consensus_input_translation_invariant() {
        let g = path4();
        let z = DVector::from_vec(vec![1.0, -2.0, 0.5, 4.0]);
        let shifted = z.add_scalar(17.5);
        for i in 0..4 {
            let a = g.consensus_input(&z, i, 1.0);
            let b = g.consensus_input(&shifted, i, 1.0);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn schedule_dispatch_matches_demo_timing() {
        let s = SwitchingSchedule::new(vec![path4(), ring4()], vec![0, 1], 5.0).unwrap();
        assert_eq!(s.period(), 10.0);
        assert_eq!(s.active_graph(2.0), &path4());
        // right-continuous at the switch instant
        assert_eq!(s.active_graph(5.0), &ring4());
        assert_eq!(s.active_graph(10.0), &path4());
    }

    #[test]
    fn schedule_is_periodic() {
        let s = SwitchingSchedule::new(vec![path4(), ring4()], vec![0, 1], 5.0).unwrap();
        for k in 0..40 {
            let t = 0.37 * k as f64;
            assert_eq!(s.active_graph(t), s.active_graph(t + s.period()));
        }
    }

    #[test]
    fn single_graph_schedule_is_constant() {
        let s = SwitchingSchedule::fixed(ring4());
        for t in [0.0, 0.3, 7.0, 123.456] {
            assert_eq!(s.active_graph(t), &ring4());
        }
    }

    #[test]
    fn schedule_rejects_unbalanced_graph() {
        let chain = Digraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(SwitchingSchedule::new(vec![chain], vec![0], 5.0).is_err());
    }

    #[test]
    fn digraph_rejects_bad_weights() {
        assert!(Digraph::new(dmatrix![0.0, -1.0; 1.0, 0.0]).is_err());
        assert!(Digraph::new(dmatrix![1.0, 0.0; 0.0, 0.0]).is_err());
        assert!(Digraph::from_edges(2, &[(0, 5, 1.0)]).is_err());
    }
}

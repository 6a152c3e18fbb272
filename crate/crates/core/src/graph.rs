//! Directed communication graphs and their column-stochastic mixing matrices.
//!
//! Self-loops are implicit: every node always sends to and receives from
//! itself, so edge sets only store edges between distinct nodes and the
//! out-degree of node `i` is `1 + |{j : (i, j) in E}|`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// A directed graph on nodes `0..num_nodes` with implicit self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    num_nodes: usize,
    edges: BTreeSet<(usize, usize)>,
    // sorted, include the node itself
    out_nbrs: Vec<Vec<usize>>,
    in_nbrs: Vec<Vec<usize>>,
}

impl DirectedGraph {
    /// Builds a graph from `(from, to)` pairs. Self-loops in the input are
    /// dropped (they are always present) and duplicates collapse.
    pub fn new(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::arg("a graph needs at least one node"));
        }
        let mut set = BTreeSet::new();
        for (from, to) in edges {
            for node in [from, to] {
                if node >= num_nodes {
                    return Err(Error::NodeOutOfRange { node, num_nodes });
                }
            }
            if from != to {
                set.insert((from, to));
            }
        }
        Ok(Self::from_set(num_nodes, set))
    }

    fn from_set(num_nodes: usize, edges: BTreeSet<(usize, usize)>) -> Self {
        let mut out_nbrs: Vec<Vec<usize>> = (0..num_nodes).map(|i| vec![i]).collect();
        let mut in_nbrs: Vec<Vec<usize>> = (0..num_nodes).map(|i| vec![i]).collect();
        for &(from, to) in &edges {
            out_nbrs[from].push(to);
            in_nbrs[to].push(from);
        }
        for list in out_nbrs.iter_mut().chain(in_nbrs.iter_mut()) {
            list.sort_unstable();
        }
        Self { num_nodes, edges, out_nbrs, in_nbrs }
    }

    /// Graph with self-loops only.
    pub fn empty(num_nodes: usize) -> Result<Self> {
        Self::new(num_nodes, std::iter::empty())
    }

    /// Directed cycle `0 -> 1 -> ... -> m-1 -> 0`.
    pub fn ring(num_nodes: usize) -> Result<Self> {
        Self::new(num_nodes, (0..num_nodes).map(|i| (i, (i + 1) % num_nodes)))
    }

    pub fn complete(num_nodes: usize) -> Result<Self> {
        Self::new(
            num_nodes,
            (0..num_nodes).flat_map(|i| (0..num_nodes).map(move |j| (i, j))),
        )
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Non-self edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `d_i = |N_i^out|`, self-loop included.
    pub fn out_degree(&self, node: usize) -> Result<usize> {
        self.check_node(node)?;
        Ok(self.out_nbrs[node].len())
    }

    /// `N_i^in`, sorted, containing `node` itself.
    pub fn in_neighbors(&self, node: usize) -> Result<&[usize]> {
        self.check_node(node)?;
        Ok(&self.in_nbrs[node])
    }

    /// `N_i^out`, sorted, containing `node` itself.
    pub fn out_neighbors(&self, node: usize) -> Result<&[usize]> {
        self.check_node(node)?;
        Ok(&self.out_nbrs[node])
    }

    // Infallible internal accessors for hot loops; callers guarantee the range.
    pub(crate) fn in_nbrs_unchecked(&self, node: usize) -> &[usize] {
        &self.in_nbrs[node]
    }

    pub(crate) fn out_degree_unchecked(&self, node: usize) -> usize {
        self.out_nbrs[node].len()
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.num_nodes {
            Err(Error::NodeOutOfRange { node, num_nodes: self.num_nodes })
        } else {
            Ok(())
        }
    }

    /// Column-stochastic `A` with `A[j][i] = 1/d_i` for `j` in `N_i^out`.
    pub fn mixing_matrix(&self) -> MixingMatrix {
        let m = self.num_nodes;
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            let share = 1.0 / self.out_nbrs[i].len() as f64;
            for &j in &self.out_nbrs[i] {
                a[(j, i)] = share;
            }
        }
        MixingMatrix(a)
    }

    /// Edge-set union with another graph on the same node set.
    pub fn union(&self, other: &DirectedGraph) -> Result<DirectedGraph> {
        if self.num_nodes != other.num_nodes {
            return Err(Error::arg(format!(
                "cannot union graphs with {} and {} nodes",
                self.num_nodes, other.num_nodes
            )));
        }
        let edges = self.edges.union(&other.edges).copied().collect();
        Ok(Self::from_set(self.num_nodes, edges))
    }

    /// One breadth-first reachability sweep per node.
    pub fn is_strongly_connected(&self) -> bool {
        let m = self.num_nodes;
        let mut seen = vec![false; m];
        let mut queue = VecDeque::with_capacity(m);
        for source in 0..m {
            seen.iter_mut().for_each(|s| *s = false);
            seen[source] = true;
            queue.clear();
            queue.push_back(source);
            let mut reached = 1;
            while let Some(u) = queue.pop_front() {
                for &v in &self.out_nbrs[u] {
                    if !seen[v] {
                        seen[v] = true;
                        reached += 1;
                        queue.push_back(v);
                    }
                }
            }
            if reached != m {
                return false;
            }
        }
        true
    }
}

/// Free-function form of [`DirectedGraph::out_degree`].
pub fn out_degree(g: &DirectedGraph, node: usize) -> Result<usize> {
    g.out_degree(node)
}

/// Free-function form of [`DirectedGraph::mixing_matrix`].
pub fn build_mixing_matrix(g: &DirectedGraph) -> MixingMatrix {
    g.mixing_matrix()
}

/// Dense column-stochastic mixing matrix `A(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix(DMatrix<f64>);

impl MixingMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.0.column_iter().map(|c| c.sum()).collect()
    }
}

/// Closed-form bounds on the mixing constants of a B-strongly-connected
/// sequence on `m` nodes.
///
/// For large `mB` the plain values are not representable: `delta_lower`
/// underflows towards 0 and `lambda_upper` rounds to 1. The log fields stay
/// accurate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    pub delta_lower: f64,
    pub lambda_upper: f64,
    /// `ln delta_lower = -mB ln m`.
    pub ln_delta_lower: f64,
    /// `ln lambda_upper = ln(1 - delta_lower) / (mB)`.
    pub ln_lambda_upper: f64,
}

/// `delta >= m^(-mB)` and `lambda <= (1 - m^(-mB))^(1/(mB))`.
pub fn spectral_bounds(m: usize, window: usize) -> Result<SpectralBounds> {
    if m == 0 || window == 0 {
        return Err(Error::arg("spectral bounds need m >= 1 and B >= 1"));
    }
    let mb = (m * window) as f64;
    let ln_delta_lower = -mb * (m as f64).ln();
    let delta_lower = ln_delta_lower.exp();
    let ln_lambda_upper = (-delta_lower).ln_1p() / mb;
    let lambda_upper = ln_lambda_upper.exp();
    Ok(SpectralBounds { delta_lower, lambda_upper, ln_delta_lower, ln_lambda_upper })
}

/// Generator family for [`generate_graph_sequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    Static,
    SeededRandom,
}

impl FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(SequenceKind::Static),
            "random" | "seeded-random" => Ok(SequenceKind::SeededRandom),
            other => Err(Error::arg(format!(
                "unknown graph sequence kind {other:?} (expected static | random)"
            ))),
        }
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SequenceKind::Static => "static",
            SequenceKind::SeededRandom => "random",
        })
    }
}

const DEFAULT_EDGE_PROB: f64 = 0.2;

/// A time-indexed sequence of directed graphs `G(0), G(1), ...`.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSequence {
    /// The same graph at every step.
    Static(DirectedGraph),
    /// `graphs[t % len]`, with connectivity window `window`.
    Periodic { graphs: Vec<DirectedGraph>, window: usize },
    /// Each window `[kB, (k+1)B - 1]` embeds a fresh random Hamiltonian cycle
    /// whose edges are scattered over the window's steps, plus independent
    /// extra edges with probability `edge_prob` per step.
    Random { num_nodes: usize, window: usize, seed: u64, edge_prob: f64 },
}

impl GraphSequence {
    pub fn periodic(graphs: Vec<DirectedGraph>, window: usize) -> Result<Self> {
        let first = graphs
            .first()
            .ok_or_else(|| Error::arg("periodic sequence needs at least one graph"))?;
        if window == 0 {
            return Err(Error::arg("window B must be positive"));
        }
        if graphs.iter().any(|g| g.num_nodes() != first.num_nodes()) {
            return Err(Error::arg("all graphs in a sequence must share the node count"));
        }
        Ok(GraphSequence::Periodic { graphs, window })
    }

    pub fn random(num_nodes: usize, window: usize, seed: u64, edge_prob: f64) -> Result<Self> {
        if num_nodes == 0 || window == 0 {
            return Err(Error::arg("random sequence needs m >= 1 and B >= 1"));
        }
        if !(0.0..=1.0).contains(&edge_prob) {
            return Err(Error::arg(format!("edge probability {edge_prob} outside [0, 1]")));
        }
        Ok(GraphSequence::Random { num_nodes, window, seed, edge_prob })
    }

    pub fn num_nodes(&self) -> usize {
        match self {
            GraphSequence::Static(g) => g.num_nodes(),
            GraphSequence::Periodic { graphs, .. } => graphs[0].num_nodes(),
            GraphSequence::Random { num_nodes, .. } => *num_nodes,
        }
    }

    /// The connectivity window `B`.
    pub fn window(&self) -> usize {
        match self {
            GraphSequence::Static(_) => 1,
            GraphSequence::Periodic { window, .. } | GraphSequence::Random { window, .. } => *window,
        }
    }

    /// `G(t)`.
    pub fn graph_at(&self, t: usize) -> DirectedGraph {
        match self {
            GraphSequence::Static(g) => g.clone(),
            GraphSequence::Periodic { graphs, .. } => graphs[t % graphs.len()].clone(),
            GraphSequence::Random { num_nodes, window, seed, edge_prob } => {
                let mut block = random_window(*num_nodes, *window, *seed, *edge_prob, t / window);
                block.swap_remove(t % window)
            }
        }
    }

    /// All graphs of window `k`, i.e. `G(kB), ..., G((k+1)B - 1)`.
    pub fn window_graphs(&self, k: usize) -> Vec<DirectedGraph> {
        match self {
            GraphSequence::Random { num_nodes, window, seed, edge_prob } => {
                random_window(*num_nodes, *window, *seed, *edge_prob, k)
            }
            _ => {
                let b = self.window();
                (k * b..(k + 1) * b).map(|t| self.graph_at(t)).collect()
            }
        }
    }

    /// Streams `G(0), G(1), ...`, generating each random window once.
    pub fn iter(&self) -> GraphIter<'_> {
        GraphIter { seq: self, t: 0, block: Vec::new() }
    }
}

pub struct GraphIter<'a> {
    seq: &'a GraphSequence,
    t: usize,
    block: Vec<DirectedGraph>,
}

impl Iterator for GraphIter<'_> {
    type Item = DirectedGraph;

    fn next(&mut self) -> Option<DirectedGraph> {
        let b = self.seq.window();
        if self.t.is_multiple_of(b) {
            self.block = self.seq.window_graphs(self.t / b);
            // pop from the back below
            self.block.reverse();
        }
        self.t += 1;
        self.block.pop()
    }
}

fn random_window(m: usize, window: usize, seed: u64, edge_prob: f64, k: usize) -> Vec<DirectedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let mut sets: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); window];
    if m > 1 {
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        for idx in 0..m {
            let edge = (order[idx], order[(idx + 1) % m]);
            let slot = rng.random_range(0..window);
            sets[slot].insert(edge);
        }
        for set in sets.iter_mut() {
            for i in 0..m {
                for j in 0..m {
                    if i != j && rng.random_bool(edge_prob) {
                        set.insert((i, j));
                    }
                }
            }
        }
    }
    sets.into_iter().map(|s| DirectedGraph::from_set(m, s)).collect()
}

/// Builds a sequence of the given kind. `Static` uses a seeded random
/// Hamiltonian cycle that never changes; `SeededRandom` uses
/// [`GraphSequence::Random`] with the default extra-edge probability.
pub fn generate_graph_sequence(kind: SequenceKind, m: usize, window: usize, seed: u64) -> Result<GraphSequence> {
    if m == 0 || window == 0 {
        return Err(Error::arg("graph sequence needs m >= 1 and B >= 1"));
    }
    match kind {
        SequenceKind::Static => {
            let mut g = random_window(m, 1, seed, 0.0, 0);
            Ok(GraphSequence::Static(g.swap_remove(0)))
        }
        SequenceKind::SeededRandom => GraphSequence::random(m, window, seed, DEFAULT_EDGE_PROB),
    }
}

/// True iff every full window `[kB, (k+1)B - 1]` inside `0..horizon` has a
/// strongly connected edge-set union.
pub fn check_b_strong_connectivity(seq: &GraphSequence, horizon: usize) -> Result<bool> {
    let b = seq.window();
    if horizon < b {
        return Err(Error::arg(format!("horizon {horizon} shorter than window B = {b}")));
    }
    for k in 0..horizon / b {
        let graphs = seq.window_graphs(k);
        let mut union = graphs[0].clone();
        for g in &graphs[1..] {
            union = union.union(g)?;
        }
        if !union.is_strongly_connected() {
            return Ok(false);
        }
    }
    Ok(true)
}

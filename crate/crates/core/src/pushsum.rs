//! Push-sum consensus state and the mixing step.
//!
//! One mixing step computes, for every agent `i`,
//!
//! ```text
//! w_i <- sum_{j in N_i^in} x_j / d_j
//! y_i <- sum_{j in N_i^in} y_j / d_j
//! z_i <- w_i / y_i
//! ```
//!
//! reading only the state at `t`. The `x` update is applied separately by
//! [`NetworkState::commit`] so that callers can add a perturbation.

use nalgebra::DVector;

use crate::graph::DirectedGraph;
use crate::{Error, Execution, Result};

/// Weights below this are treated as a broken mixing matrix.
pub const MIN_WEIGHT: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub x: DVector<f64>,
    pub y: f64,
    pub w: DVector<f64>,
    pub z: DVector<f64>,
}

impl AgentState {
    fn zeros(d: usize) -> Self {
        Self { x: DVector::zeros(d), y: 1.0, w: DVector::zeros(d), z: DVector::zeros(d) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub agents: Vec<AgentState>,
    pub t: usize,
}

/// Free-function form of [`NetworkState::new`].
pub fn init_network(m: usize, d: usize) -> Result<NetworkState> {
    NetworkState::new(m, d)
}

impl NetworkState {
    /// All `x`, `w`, `z` zero and all `y = 1`.
    pub fn new(m: usize, d: usize) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(Error::arg("network needs m >= 1 agents and dimension d >= 1"));
        }
        Ok(Self { agents: (0..m).map(|_| AgentState::zeros(d)).collect(), t: 0 })
    }

    /// Starts from given positions (with `w = z = x`, `y = 1`).
    pub fn from_positions(xs: Vec<DVector<f64>>) -> Result<Self> {
        let d = xs.first().map(|x| x.len()).ok_or_else(|| Error::arg("no agents"))?;
        if d == 0 || xs.iter().any(|x| x.len() != d) {
            return Err(Error::arg("all agents need the same positive dimension"));
        }
        let agents = xs
            .into_iter()
            .map(|x| AgentState { w: x.clone(), z: x.clone(), x, y: 1.0 })
            .collect();
        Ok(Self { agents, t: 0 })
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn dim(&self) -> usize {
        self.agents[0].x.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.agents.iter().map(|a| a.y).sum()
    }

    /// `x_bar = (1/m) sum_i x_i`.
    pub fn average(&self) -> DVector<f64> {
        let mut sum = DVector::zeros(self.dim());
        for a in &self.agents {
            sum += &a.x;
        }
        sum / self.num_agents() as f64
    }

    /// Writes `w`, `y`, `z` for step `t -> t+1`; `x` and `t` are untouched.
    pub fn mix(&mut self, graph: &DirectedGraph, exec: Execution) -> Result<()> {
        let m = self.num_agents();
        if graph.num_nodes() != m {
            return Err(Error::arg(format!(
                "graph has {} nodes but the network has {m} agents",
                graph.num_nodes()
            )));
        }
        let agents = &self.agents;
        let t = self.t;
        let mixed = exec.map_range(m, |i| {
            let nbrs = graph.in_nbrs_unchecked(i);
            let first = nbrs[0];
            let d0 = graph.out_degree_unchecked(first) as f64;
            let mut w = &agents[first].x / d0;
            let mut y = agents[first].y / d0;
            for &j in &nbrs[1..] {
                let dj = graph.out_degree_unchecked(j) as f64;
                w.axpy(1.0 / dj, &agents[j].x, 1.0);
                y += agents[j].y / dj;
            }
            (w, y)
        });
        for (i, (w, y)) in mixed.into_iter().enumerate() {
            if !(y > MIN_WEIGHT) {
                return Err(Error::MassUnderflow { agent: i, t, weight: y });
            }
            let agent = &mut self.agents[i];
            agent.z = &w / y;
            agent.w = w;
            agent.y = y;
        }
        Ok(())
    }

    /// `x_i <- w_i + e_i` and `t <- t + 1`.
    pub fn commit(&mut self, perturbations: Vec<DVector<f64>>) -> Result<()> {
        if perturbations.len() != self.num_agents() {
            return Err(Error::arg("one perturbation per agent required"));
        }
        let t = self.t;
        for (i, (agent, e)) in self.agents.iter_mut().zip(perturbations).enumerate() {
            let x = &agent.w + e;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { agent: i, t: t + 1 });
            }
            agent.x = x;
        }
        self.t += 1;
        Ok(())
    }

    /// Unperturbed push-sum iteration: mix, then `x <- w`.
    pub fn consensus_step(&mut self, graph: &DirectedGraph, exec: Execution) -> Result<()> {
        self.mix(graph, exec)?;
        let zeros = vec![DVector::zeros(self.dim()); self.num_agents()];
        self.commit(zeros)
    }

    /// `||x_i - x_bar||^2` per agent.
    pub fn consensus_error(&self) -> Vec<f64> {
        let mean = self.average();
        self.agents.iter().map(|a| (&a.x - &mean).norm_squared()).collect()
    }

    /// `||z_i - x_bar||` per agent, with `x_bar` the current average of `x`.
    /// Right after [`mix`](Self::mix) this is `||z_i(t+1) - x_bar(t)||`.
    pub fn z_deviation(&self) -> Vec<f64> {
        let mean = self.average();
        self.agents.iter().map(|a| (&a.z - &mean).norm()).collect()
    }
}

/// Mixing step as a free function; returns the updated state.
pub fn pushsum_mix(mut ns: NetworkState, graph: &DirectedGraph) -> Result<NetworkState> {
    ns.mix(graph, Execution::default())?;
    Ok(ns)
}

/// Free-function form of [`NetworkState::consensus_error`].
pub fn consensus_error(ns: &NetworkState) -> Vec<f64> {
    ns.consensus_error()
}

/// Free-function form of [`NetworkState::z_deviation`].
pub fn z_deviation(ns: &NetworkState) -> Vec<f64> {
    ns.z_deviation()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn init_matches_protocol_start() {
        let ns = init_network(4, 2).unwrap();
        assert_eq!(ns.num_agents(), 4);
        assert!(ns.agents.iter().all(|a| a.y == 1.0 && a.x.iter().all(|&c| c == 0.0)));
        assert_eq!(ns.total_weight(), 4.0);
        let one = init_network(1, 1).unwrap();
        assert_eq!(one.agents[0].y, 1.0);
        assert!(init_network(0, 1).is_err());
    }

    #[test]
    fn single_agent_mix_is_identity() {
        let mut ns = NetworkState::from_positions(vec![v(&[1.5, -2.0])]).unwrap();
        ns.mix(&DirectedGraph::empty(1).unwrap(), Execution::Sequential).unwrap();
        let a = &ns.agents[0];
        assert_eq!(a.w, v(&[1.5, -2.0]));
        assert_eq!(a.y, 1.0);
        assert_eq!(a.z, a.x);
    }

    #[test]
    fn doubly_stochastic_pair_averages_in_one_step() {
        let g = DirectedGraph::complete(2).unwrap();
        let mut ns = NetworkState::from_positions(vec![v(&[0.0]), v(&[4.0])]).unwrap();
        ns.mix(&g, Execution::Sequential).unwrap();
        for a in &ns.agents {
            assert_eq!(a.z[0], 2.0);
        }
        assert!(ns.z_deviation().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn almost_circular_weights_move_by_columns() {
        let g = DirectedGraph::new(6, [(0, 1), (2, 3), (5, 0)]).unwrap();
        let mut ns = NetworkState::new(6, 1).unwrap();
        ns.mix(&g, Execution::Sequential).unwrap();
        let y: Vec<f64> = ns.agents.iter().map(|a| a.y).collect();
        assert_eq!(y, vec![1.0, 1.5, 0.5, 1.5, 1.0, 0.5]);
        assert_relative_eq!(ns.total_weight(), 6.0);
    }

    #[test]
    fn consensus_error_examples() {
        let same = NetworkState::from_positions(vec![v(&[3.0, 1.0]); 3]).unwrap();
        assert!(same.consensus_error().iter().all(|&e| e == 0.0));
        assert!(same.z_deviation().iter().all(|&e| e == 0.0));
        let pair = NetworkState::from_positions(vec![v(&[0.0]), v(&[2.0])]).unwrap();
        assert_eq!(pair.consensus_error(), vec![1.0, 1.0]);
    }

    #[test]
    fn z_deviation_matches_definition() {
        let xs = vec![v(&[0.3, -1.0]), v(&[2.0, 0.5]), v(&[-0.7, 0.1]), v(&[1.1, 1.9])];
        let mut ns = NetworkState::from_positions(xs.clone()).unwrap();
        let g = DirectedGraph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        ns.mix(&g, Execution::Sequential).unwrap();
        let mean: Vec<f64> = (0..2).map(|k| xs.iter().map(|x| x[k]).sum::<f64>() / 4.0).collect();
        for (a, dev) in ns.agents.iter().zip(ns.z_deviation()) {
            let brute = ((a.z[0] - mean[0]).powi(2) + (a.z[1] - mean[1]).powi(2)).sqrt();
            assert_relative_eq!(dev, brute, epsilon = 1e-15);
        }
    }

    #[test]
    fn wrong_graph_size_is_rejected() {
        let mut ns = NetworkState::new(3, 1).unwrap();
        assert!(ns.mix(&DirectedGraph::ring(4).unwrap(), Execution::Sequential).is_err());
    }

    #[test]
    fn non_finite_commit_reports_agent() {
        let mut ns = NetworkState::new(2, 1).unwrap();
        ns.mix(&DirectedGraph::ring(2).unwrap(), Execution::Sequential).unwrap();
        let err = ns.commit(vec![v(&[0.0]), v(&[f64::NAN])]).unwrap_err();
        assert!(matches!(err, Error::Divergence { agent: 1, t: 1 }));
    }
}

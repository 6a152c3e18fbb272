use nalgebra::DMatrix;

use crate::graph::GraphSequence;
use crate::{Error, Result};

/// Dobrushin coefficient of a column-stochastic matrix:
/// `(1/2) max_{j,l} sum_i |P_ij - P_il|`. Zero iff all columns agree.
pub fn ergodicity_coefficient(p: &DMatrix<f64>) -> f64 {
    let n = p.ncols();
    let mut best: f64 = 0.0;
    for j in 0..n {
        for l in j + 1..n {
            let diff: f64 = p.column(j).iter().zip(p.column(l).iter()).map(|(a, b)| (a - b).abs()).sum();
            best = best.max(0.5 * diff);
        }
    }
    best
}

/// Empirical mixing constants over windows of `L = mB` consecutive steps
/// starting at every `s` with `s + L <= horizon`.
///
/// `delta` is the smallest positive entry of any window product
/// `A(s+L-1) ... A(s)`; `lambda` is the largest per-step contraction
/// `tau(P)^(1/L)` of a product toward rank one.
pub fn estimate_delta_lambda(seq: &GraphSequence, horizon: usize) -> Result<(f64, f64)> {
    let m = seq.num_nodes();
    let len = m * seq.window();
    if horizon < len {
        return Err(Error::arg(format!("horizon {horizon} shorter than a product window of {len} steps")));
    }
    let mats: Vec<DMatrix<f64>> =
        seq.iter().take(horizon).map(|g| g.mixing_matrix().into_matrix()).collect();
    let mut delta = f64::INFINITY;
    let mut lambda: f64 = 0.0;
    for s in 0..=horizon - len {
        let mut prod = mats[s].clone();
        for a in &mats[s + 1..s + len] {
            prod = a * prod;
        }
        for &v in prod.iter() {
            if v > 0.0 {
                delta = delta.min(v);
            }
        }
        lambda = lambda.max(ergodicity_coefficient(&prod).powf(1.0 / len as f64));
    }
    Ok((delta, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{spectral_bounds, DirectedGraph};

    #[test]
    fn single_node() {
        let seq = GraphSequence::Static(DirectedGraph::empty(1).unwrap());
        assert_eq!(estimate_delta_lambda(&seq, 1).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn complete_graph_reaches_consensus() {
        let seq = GraphSequence::Static(DirectedGraph::complete(3).unwrap());
        let (delta, lambda) = estimate_delta_lambda(&seq, 10).unwrap();
        assert!((delta - 1.0 / 3.0).abs() < 1e-15);
        assert!(lambda < 1e-5, "{lambda}");
    }

    #[test]
    fn random_sequence_respects_closed_form() {
        let seq = GraphSequence::random(5, 2, 3, 0.2).unwrap();
        let (delta, lambda) = estimate_delta_lambda(&seq, 60).unwrap();
        let b = spectral_bounds(5, 2).unwrap();
        assert!(delta >= b.delta_lower);
        assert!(lambda < 1.0);
        assert!(estimate_delta_lambda(&seq, 9).is_err());
    }
}

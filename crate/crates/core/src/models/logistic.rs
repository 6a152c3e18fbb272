//! Bayesian logistic regression with labels in {-1, +1} and a Laplace prior.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::data::{partition, sample_batch, Dataset, PartitionMode, Shard};
use crate::langevin::{AgentRng, Potential};
use crate::{Error, Result};

/// `1 / (1 + exp(-a))` without overflow.
fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_labels(ds: &Dataset, rows: &[usize]) -> Result<()> {
    match rows.iter().find(|&&r| ds.target(r) != 1.0 && ds.target(r) != -1.0) {
        Some(&r) => Err(Error::Data(format!("label {} at row {r} is not -1 or +1", ds.target(r)))),
        None => Ok(()),
    }
}

fn likelihood_gradient_into(g: &mut DVector<f64>, w: &DVector<f64>, ds: &Dataset, rows: &[usize], scale: f64) {
    let ws = w.as_slice();
    for &r in rows {
        let x = ds.row(r);
        let y = ds.target(r);
        let margin: f64 = x.iter().zip(ws).map(|(a, b)| a * b).sum::<f64>() * y;
        let c = -scale * y * sigmoid(-margin);
        if c != 0.0 {
            for (gk, xk) in g.iter_mut().zip(x) {
                *gk += c * xk;
            }
        }
    }
}

/// Gradient of `-scale * sum_b log sigmoid(y_b w^T x_b) + prior_weight * ||w||_1`,
/// i.e. `scale * sum_b -y_b x_b sigmoid(-y_b w^T x_b) + prior_weight * sign(w)`
/// with `sign(0) = 0`.
pub fn grad_u_logistic(w: &DVector<f64>, ds: &Dataset, rows: &[usize], scale: f64, prior_weight: f64) -> Result<DVector<f64>> {
    check_labels(ds, rows)?;
    let mut g = w.map(|v| prior_weight * sign(v));
    likelihood_gradient_into(&mut g, w, ds, rows, scale);
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct LogisticPotential {
    pub data: Dataset,
    pub shards: Vec<Shard>,
    pub batch: usize,
}

impl LogisticPotential {
    pub fn partitioned(data: Dataset, m: usize, batch: usize, seed: u64) -> Result<Self> {
        let all: Vec<usize> = (0..data.len()).collect();
        check_labels(&data, &all)?;
        let shards = partition(data.len(), m, PartitionMode::Random, seed)?;
        Ok(Self { data, shards, batch })
    }
}

impl Potential for LogisticPotential {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn num_agents(&self) -> usize {
        self.shards.len()
    }

    fn gradient(&self, agent: usize, w: &DVector<f64>, rng: &mut AgentRng) -> DVector<f64> {
        let (rows, scale) = sample_batch(&self.shards[agent].indices, self.batch, rng);
        let weight = 1.0 / self.shards.len() as f64;
        // labels were validated at construction
        let mut g = w.map(|v| weight * sign(v));
        likelihood_gradient_into(&mut g, w, &self.data, &rows, scale);
        g
    }
}

/// Stand-in for a9a when the file is unavailable: `n x d` binary features
/// with density `density`, labels drawn from a logistic model with random
/// Gaussian weights and a centring intercept.
pub fn synthesize_binary_classification(n: usize, d: usize, density: f64, seed: u64) -> Result<Dataset> {
    if n < 2 || d == 0 {
        return Err(Error::arg("surrogate dataset needs n >= 2 and d >= 1"));
    }
    if !(density > 0.0 && density < 1.0) {
        return Err(Error::arg(format!("feature density {density} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..d).map(|_| 0.6 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
    let offset = density * weights.iter().sum::<f64>();
    let mut features = Vec::with_capacity(n * d);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| if rng.random_bool(density) { 1.0 } else { 0.0 }).collect();
        let score: f64 = row.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>() - offset;
        targets.push(if rng.random_bool(sigmoid(score)) { 1.0 } else { -1.0 });
        features.extend(row);
    }
    Dataset::new(d, features, targets)
}

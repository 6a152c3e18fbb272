//! Bayesian linear regression `y = X w + noise`, `noise ~ N(0, sigma^2)`.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::data::{partition, sample_batch, Dataset, PartitionMode, Shard};
use super::gaussian::{GaussianDist, PriorTerm};
use crate::langevin::{AgentRng, Potential};
use crate::{Error, Result};

/// Rows `X_j ~ N(0, I)` and `y = X w_true + noise`.
pub fn generate_linreg_data(n: usize, d: usize, sigma: f64, true_w: &[f64], seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::arg("linear regression data needs n >= 1 and d >= 1"));
    }
    if true_w.len() != d {
        return Err(Error::arg(format!("true weights have length {} but d = {d}", true_w.len())));
    }
    if !(sigma >= 0.0) {
        return Err(Error::arg(format!("noise scale {sigma} must be >= 0")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::arg(e.to_string()))?;
    let mut features = Vec::with_capacity(n * d);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let clean: f64 = row.iter().zip(true_w).map(|(x, w)| x * w).sum();
        targets.push(clean + noise.sample(&mut rng));
        features.extend(row);
    }
    Dataset::new(d, features, targets)
}

/// Conjugate update: `cov^-1 = P0 + X^T X / sigma^2`,
/// `mean = cov (P0 m0 + X^T y / sigma^2)`.
pub fn linreg_posterior(ds: &Dataset, prior: &GaussianDist, sigma: f64) -> Result<GaussianDist> {
    let d = prior.dim();
    if ds.dim() != d {
        return Err(Error::arg("dataset and prior dimensions differ"));
    }
    if !(sigma > 0.0) {
        return Err(Error::arg("sigma must be positive"));
    }
    let p0 = prior.precision()?;
    let s2 = sigma * sigma;
    let mut precision = p0.clone();
    let mut rhs = &p0 * &prior.mean;
    for i in 0..ds.len() {
        let x = DVector::from_column_slice(ds.row(i));
        precision.syger(1.0 / s2, &x, &x, 1.0);
        rhs.axpy(ds.target(i) / s2, &x, 1.0);
    }
    let chol = precision
        .cholesky()
        .ok_or_else(|| Error::Numerical("posterior precision is not positive definite".into()))?;
    let mean = chol.solve(&rhs);
    let cov = chol.inverse();
    let cov = (&cov + cov.transpose()) * 0.5;
    GaussianDist::new(mean, cov)
}

/// `scale * X_b^T (X_b z - y_b) / sigma^2 + prior gradient`.
pub fn grad_u_linreg(
    z: &DVector<f64>,
    ds: &Dataset,
    rows: &[usize],
    scale: f64,
    prior: &PriorTerm,
    sigma: f64,
) -> DVector<f64> {
    let mut g = prior.gradient(z);
    let inv_s2 = 1.0 / (sigma * sigma);
    let zs = z.as_slice();
    for &r in rows {
        let x = ds.row(r);
        let resid: f64 = x.iter().zip(zs).map(|(a, b)| a * b).sum::<f64>() - ds.target(r);
        let c = scale * resid * inv_s2;
        for (gk, xk) in g.iter_mut().zip(x) {
            *gk += c * xk;
        }
    }
    g
}

/// Linear regression potential split across agents by shard.
#[derive(Debug, Clone)]
pub struct LinRegPotential {
    pub data: Dataset,
    pub shards: Vec<Shard>,
    pub prior: GaussianDist,
    pub sigma: f64,
    pub batch: usize,
    prior_term: PriorTerm,
}

impl LinRegPotential {
    pub fn new(data: Dataset, shards: Vec<Shard>, prior: GaussianDist, sigma: f64, batch: usize) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::arg("need at least one shard"));
        }
        if prior.dim() != data.dim() {
            return Err(Error::arg("prior and data dimensions differ"));
        }
        let prior_term = PriorTerm::from_gaussian(&prior, 1.0 / shards.len() as f64)?;
        Ok(Self { data, shards, prior, sigma, batch, prior_term })
    }

    /// Random equal split of `data` over `m` agents.
    pub fn partitioned(data: Dataset, m: usize, prior: GaussianDist, sigma: f64, batch: usize, seed: u64) -> Result<Self> {
        let shards = partition(data.len(), m, PartitionMode::Random, seed)?;
        Self::new(data, shards, prior, sigma, batch)
    }

    /// Exact posterior for the full dataset.
    pub fn posterior(&self) -> Result<GaussianDist> {
        linreg_posterior(&self.data, &self.prior, self.sigma)
    }

    /// Lipschitz constant of the largest per-agent full-shard gradient.
    pub fn max_shard_curvature(&self) -> f64 {
        self.shards
            .iter()
            .map(|s| {
                let mut h = &self.prior_term.precision * self.prior_term.weight;
                for &r in &s.indices {
                    let x = DVector::from_column_slice(self.data.row(r));
                    h.syger(1.0 / (self.sigma * self.sigma), &x, &x, 1.0);
                }
                nalgebra::SymmetricEigen::new(h).eigenvalues.max()
            })
            .fold(0.0_f64, f64::max)
    }
}

impl Potential for LinRegPotential {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn num_agents(&self) -> usize {
        self.shards.len()
    }

    fn gradient(&self, agent: usize, z: &DVector<f64>, rng: &mut AgentRng) -> DVector<f64> {
        let (rows, scale) = sample_batch(&self.shards[agent].indices, self.batch, rng);
        grad_u_linreg(z, &self.data, &rows, scale, &self.prior_term, self.sigma)
    }
}

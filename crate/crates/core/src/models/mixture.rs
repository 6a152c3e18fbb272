//! Posterior over the means of the two-component mixture
//! `x ~ 1/2 N(theta1, s^2) + 1/2 N(theta1 + theta2, s^2)` with independent
//! Gaussian priors on `theta1` and `theta2`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::data::{partition, sample_batch, Dataset, PartitionMode, Shard};
use crate::langevin::{AgentRng, Potential};
use crate::{Error, Result};

/// Likelihood variance and prior variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixturePrior {
    pub sigma_x2: f64,
    pub var_theta1: f64,
    pub var_theta2: f64,
}

impl Default for MixturePrior {
    fn default() -> Self {
        Self { sigma_x2: 2.0, var_theta1: 10.0, var_theta2: 1.0 }
    }
}

/// `n` draws stored in the targets column (features are a constant 1).
pub fn generate_mixture_data(n: usize, theta1: f64, theta2: f64, sigma_x: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::arg("mixture data needs n >= 1"));
    }
    let noise = Normal::new(0.0, sigma_x).map_err(|e| Error::arg(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..n)
        .map(|_| {
            let centre = if rng.random_bool(0.5) { theta1 } else { theta1 + theta2 };
            centre + noise.sample(&mut rng)
        })
        .collect();
    Dataset::new(1, vec![1.0; n], samples)
}

/// Gradient of `-scale * sum_b log p(x_b | theta) - prior_weight * log p(theta)`.
/// Responsibilities are computed with log-sum-exp.
pub fn grad_u_mixture(
    theta: &DVector<f64>,
    ds: &Dataset,
    rows: &[usize],
    scale: f64,
    prior: &MixturePrior,
    prior_weight: f64,
) -> DVector<f64> {
    let (t1, t2) = (theta[0], theta[1]);
    let s2 = prior.sigma_x2;
    let mut g1 = prior_weight * t1 / prior.var_theta1;
    let mut g2 = prior_weight * t2 / prior.var_theta2;
    for &r in rows {
        let x = ds.target(r);
        let (d1, d2) = (x - t1, x - t1 - t2);
        let (l1, l2) = (-d1 * d1 / (2.0 * s2), -d2 * d2 / (2.0 * s2));
        let top = l1.max(l2);
        let (e1, e2) = ((l1 - top).exp(), (l2 - top).exp());
        let (r1, r2) = (e1 / (e1 + e2), e2 / (e1 + e2));
        g1 -= scale * (r1 * d1 + r2 * d2) / s2;
        g2 -= scale * r2 * d2 / s2;
    }
    DVector::from_column_slice(&[g1, g2])
}

#[derive(Debug, Clone)]
pub struct MixturePotential {
    pub data: Dataset,
    pub shards: Vec<Shard>,
    pub prior: MixturePrior,
    pub batch: usize,
}

impl MixturePotential {
    pub fn partitioned(data: Dataset, m: usize, prior: MixturePrior, batch: usize, seed: u64) -> Result<Self> {
        let shards = partition(data.len(), m, PartitionMode::Random, seed)?;
        Ok(Self { data, shards, prior, batch })
    }
}

impl Potential for MixturePotential {
    fn dim(&self) -> usize {
        2
    }

    fn num_agents(&self) -> usize {
        self.shards.len()
    }

    fn gradient(&self, agent: usize, z: &DVector<f64>, rng: &mut AgentRng) -> DVector<f64> {
        let (rows, scale) = sample_batch(&self.shards[agent].indices, self.batch, rng);
        let weight = 1.0 / self.shards.len() as f64;
        grad_u_mixture(z, &self.data, &rows, scale, &self.prior, weight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn degenerate_noise_gives_two_values() {
        let ds = generate_mixture_data(200, 0.0, 1.0, 0.0, 5).unwrap();
        assert!(ds.targets().iter().all(|&x| x == 0.0 || x == 1.0));
        assert!(ds.targets().contains(&0.0) && ds.targets().contains(&1.0));
    }

    #[test]
    fn sample_mean_matches_moments() {
        let (t1, t2, s2) = (0.0, 1.0, 2.0f64);
        let n = 800;
        let ds = generate_mixture_data(n, t1, t2, s2.sqrt(), 21).unwrap();
        let mean = ds.targets().iter().sum::<f64>() / n as f64;
        let tol = 3.0 * ((s2 + t2 * t2 / 4.0) / n as f64).sqrt();
        assert!((mean - (t1 + t2 / 2.0)).abs() < tol, "mean {mean} tol {tol}");
    }

    #[test]
    fn prior_only_gradient() {
        let ds = Dataset::empty(1).unwrap();
        let theta = DVector::from_column_slice(&[2.0, -3.0]);
        let g = grad_u_mixture(&theta, &ds, &[], 1.0, &MixturePrior::default(), 1.0);
        assert_relative_eq!(g[0], 0.2);
        assert_relative_eq!(g[1], -3.0);
    }

    #[test]
    fn far_outlier_stays_finite() {
        let ds = Dataset::new(1, vec![1.0], vec![1e4]).unwrap();
        let g = grad_u_mixture(&DVector::from_column_slice(&[0.0, 1.0]), &ds, &[0], 1.0, &MixturePrior::default(), 1.0);
        assert!(g.iter().all(|v| v.is_finite()));
    }
}

//! Gaussian target built from per-agent quadratics
//! `U_i(x) = 1/2 (x - c_i)^T P_i (x - c_i)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::gaussian::GaussianDist;
use crate::langevin::{AgentRng, Potential, PotentialProps};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct QuadraticPotential {
    centers: Vec<DVector<f64>>,
    precisions: Vec<DMatrix<f64>>,
}

impl QuadraticPotential {
    pub fn new(centers: Vec<DVector<f64>>, precisions: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = centers.first().map(|c| c.len()).ok_or_else(|| Error::arg("no agents"))?;
        if centers.len() != precisions.len() {
            return Err(Error::arg("one precision matrix per center required"));
        }
        for (c, p) in centers.iter().zip(&precisions) {
            if c.len() != d || p.nrows() != d || p.ncols() != d {
                return Err(Error::arg("inconsistent dimensions"));
            }
            if SymmetricEigen::new(p.clone()).eigenvalues.min() <= 0.0 {
                return Err(Error::arg("precision matrices must be positive definite"));
            }
        }
        Ok(Self { centers, precisions })
    }

    /// `U_i(x) = 1/2 ||x - c_i||^2`, so `mu = L = 1` per agent.
    pub fn isotropic(centers: Vec<DVector<f64>>) -> Result<Self> {
        let d = centers.first().map(|c| c.len()).ok_or_else(|| Error::arg("no agents"))?;
        let precisions = vec![DMatrix::identity(d, d); centers.len()];
        Self::new(centers, precisions)
    }

    /// The target `exp(-sum_i U_i)`.
    pub fn target(&self) -> Result<GaussianDist> {
        let d = self.centers[0].len();
        let mut precision = DMatrix::zeros(d, d);
        let mut rhs = DVector::zeros(d);
        for (c, p) in self.centers.iter().zip(&self.precisions) {
            precision += p;
            rhs += p * c;
        }
        let chol = precision.cholesky().ok_or_else(|| Error::Numerical("singular target precision".into()))?;
        let cov = chol.inverse();
        GaussianDist::new(chol.solve(&rhs), (&cov + cov.transpose()) * 0.5)
    }
}

impl Potential for QuadraticPotential {
    fn dim(&self) -> usize {
        self.centers[0].len()
    }

    fn num_agents(&self) -> usize {
        self.centers.len()
    }

    fn gradient(&self, agent: usize, z: &DVector<f64>, _rng: &mut AgentRng) -> DVector<f64> {
        &self.precisions[agent] * (z - &self.centers[agent])
    }

    /// Common constants for every `U_i`: the smallest and largest eigenvalue
    /// over all agent precisions.
    fn props(&self) -> PotentialProps {
        let (mut mu, mut l) = (f64::INFINITY, 0.0_f64);
        for p in &self.precisions {
            let eig = SymmetricEigen::new(p.clone()).eigenvalues;
            mu = mu.min(eig.min());
            l = l.max(eig.max());
        }
        PotentialProps { mu: Some(mu), lipschitz: Some(l), dim: self.dim() }
    }
}

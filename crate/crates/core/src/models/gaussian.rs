use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Multivariate normal with symmetric positive-definite covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDist {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianDist {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::Numerical(format!(
                "covariance is {}x{} for a mean of length {d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if (&cov - cov.transpose()).amax() > 1e-10 {
            return Err(Error::Numerical("covariance is not symmetric".into()));
        }
        let min_eig = SymmetricEigen::new(cov.clone()).eigenvalues.min();
        if !(min_eig > 0.0) {
            return Err(Error::Numerical(format!("covariance is not positive definite (min eigenvalue {min_eig:e})")));
        }
        Ok(Self { mean, cov })
    }

    pub fn standard(d: usize) -> Self {
        Self { mean: DVector::zeros(d), cov: DMatrix::identity(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn precision(&self) -> Result<DMatrix<f64>> {
        self.cov
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| Error::Numerical("covariance is singular".into()))
    }
}

/// Gaussian prior contribution `weight * P (z - mean)` to a gradient, with
/// `P` the prior precision. Agents each carry `weight = 1/m` of the prior so
/// that the network potential contains it exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorTerm {
    pub mean: DVector<f64>,
    pub precision: DMatrix<f64>,
    pub weight: f64,
}

impl PriorTerm {
    pub fn from_gaussian(prior: &GaussianDist, weight: f64) -> Result<Self> {
        Ok(Self { mean: prior.mean.clone(), precision: prior.precision()?, weight })
    }

    pub fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        (&self.precision * (z - &self.mean)) * self.weight
    }
}

/// Principal square root of a symmetric PSD matrix via eigendecomposition,
/// with negative roundoff eigenvalues clamped to zero.
pub fn sym_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

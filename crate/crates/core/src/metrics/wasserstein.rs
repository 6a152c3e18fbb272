use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::models::{sym_sqrt, GaussianDist};
use crate::{Error, Result};

/// Ridge added to fitted covariances.
pub const FIT_REGULARIZATION: f64 = 1e-9;

fn check_psd(cov: &DMatrix<f64>, which: &str) -> Result<()> {
    if cov.nrows() != cov.ncols() || (cov - cov.transpose()).amax() > 1e-10 {
        return Err(Error::Numerical(format!("{which} covariance is not symmetric")));
    }
    let eig = SymmetricEigen::new(cov.clone()).eigenvalues;
    let scale = eig.amax().max(1.0);
    if eig.min() < -1e-9 * scale || eig.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("{which} covariance is not positive semi-definite")));
    }
    Ok(())
}

fn check_pair(g1: &GaussianDist, g2: &GaussianDist) -> Result<()> {
    if g1.dim() != g2.dim() {
        return Err(Error::arg("Gaussians of different dimension"));
    }
    check_psd(&g1.cov, "first")?;
    check_psd(&g2.cov, "second")
}

/// `||m1 - m2|| + ||S1^(1/2) - S2^(1/2)||_F`, the closed form used to
/// report linear-regression convergence. Not the optimal-transport W2; see
/// [`w2_gaussian_bures`].
pub fn w2_gaussian_paper(g1: &GaussianDist, g2: &GaussianDist) -> Result<f64> {
    check_pair(g1, g2)?;
    let mean_term = (&g1.mean - &g2.mean).norm();
    let cov_term = (sym_sqrt(&g1.cov) - sym_sqrt(&g2.cov)).norm();
    Ok(mean_term + cov_term)
}

/// Exact 2-Wasserstein distance between Gaussians:
/// `(||m1 - m2||^2 + tr(S1 + S2 - 2 (S1^(1/2) S2 S1^(1/2))^(1/2)))^(1/2)`.
pub fn w2_gaussian_bures(g1: &GaussianDist, g2: &GaussianDist) -> Result<f64> {
    check_pair(g1, g2)?;
    let r1 = sym_sqrt(&g1.cov);
    let cross = sym_sqrt(&(&r1 * &g2.cov * &r1));
    let bures = (g1.cov.trace() + g2.cov.trace() - 2.0 * cross.trace()).max(0.0);
    Ok(((&g1.mean - &g2.mean).norm_squared() + bures).sqrt())
}

/// Sample mean and unbiased covariance plus `1e-9 I`. Needs at least `d + 1`
/// samples.
pub fn empirical_gaussian(samples: &[DVector<f64>]) -> Result<GaussianDist> {
    let d = samples.first().map(|s| s.len()).ok_or_else(|| Error::arg("no samples"))?;
    if samples.len() < d + 1 {
        return Err(Error::arg(format!("need at least {} samples in dimension {d}, got {}", d + 1, samples.len())));
    }
    let n = samples.len() as f64;
    let mut mean = DVector::zeros(d);
    for s in samples {
        mean += s;
    }
    mean /= n;
    let mut cov = DMatrix::zeros(d, d);
    for s in samples {
        let c = s - &mean;
        cov.syger(1.0, &c, &c, 1.0);
    }
    cov /= n - 1.0;
    let cov = (&cov + cov.transpose()) * 0.5 + DMatrix::identity(d, d) * FIT_REGULARIZATION;
    Ok(GaussianDist { mean, cov })
}

//! Reference implementations shared by the oracle and acceptance suites.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pushsum_langevin::graph::DirectedGraph;
use pushsum_langevin::langevin::{agent_rng, NoiseModel, Sampler, StepSchedule};
use pushsum_langevin::models::{
    generate_linreg_data, generate_mixture_data, grad_u_linreg, grad_u_logistic, grad_u_mixture, sample_batch,
    synthesize_binary_classification, GaussianDist, LinRegPotential, MixturePrior, PriorTerm, QuadraticPotential,
};
use pushsum_langevin::GraphSequence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const FD_STEP: f64 = 1e-5;
pub const FD_POINTS: usize = 10;

pub fn central_difference(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(x.len(), |k, _| {
        let mut hi = x.clone();
        let mut lo = x.clone();
        hi[k] += FD_STEP;
        lo[k] -= FD_STEP;
        (f(&hi) - f(&lo)) / (2.0 * FD_STEP)
    })
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-8)
}

pub fn random_point(rng: &mut ChaCha8Rng, d: usize, spread: f64) -> DVector<f64> {
    DVector::from_fn(d, |_, _| spread * rng.sample::<f64, _>(StandardNormal))
}

/// Largest relative error of the linreg gradient against differences of
/// the negative log density, over `FD_POINTS` random points.
pub fn linreg_fd_error() -> f64 {
    let sigma = 0.7;
    let ds = generate_linreg_data(40, 3, sigma, &[0.5, -1.0, 2.0], 11).unwrap();
    let prior = GaussianDist::new(
        DVector::from_column_slice(&[0.1, 0.0, -0.3]),
        DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 1.5]),
    )
    .unwrap();
    let term = PriorTerm::from_gaussian(&prior, 0.25).unwrap();
    let p = prior.cov.clone().try_inverse().unwrap();
    let batch: Vec<usize> = (0..40).step_by(3).collect();
    let scale = 40.0 / batch.len() as f64;
    let neg_log = |z: &DVector<f64>| {
        let mut u = 0.0;
        for &r in &batch {
            let x = DVector::from_column_slice(ds.row(r));
            u += (x.dot(z) - ds.target(r)).powi(2) / (2.0 * sigma * sigma);
        }
        let c = z - &prior.mean;
        scale * u + 0.25 * 0.5 * c.dot(&(&p * &c))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..FD_POINTS)
        .map(|_| {
            let z = random_point(&mut rng, 3, 2.0);
            let g = grad_u_linreg(&z, &ds, &batch, scale, &term, sigma);
            rel_err(&g, &central_difference(neg_log, &z))
        })
        .fold(0.0, f64::max)
}

pub fn mixture_fd_error() -> f64 {
    let prior = MixturePrior::default();
    let ds = generate_mixture_data(60, 0.0, 1.0, prior.sigma_x2.sqrt(), 5).unwrap();
    let batch: Vec<usize> = (0..60).collect();
    let (scale, weight) = (3.0, 0.25);
    let neg_log = |th: &DVector<f64>| {
        let s2 = prior.sigma_x2;
        let mut u = 0.0;
        for &r in &batch {
            let x = ds.target(r);
            let a = (-(x - th[0]).powi(2) / (2.0 * s2)).exp();
            let b = (-(x - th[0] - th[1]).powi(2) / (2.0 * s2)).exp();
            u -= (0.5 * a + 0.5 * b).ln();
        }
        scale * u + weight * (th[0] * th[0] / (2.0 * prior.var_theta1) + th[1] * th[1] / (2.0 * prior.var_theta2))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    (0..FD_POINTS)
        .map(|_| {
            let th = random_point(&mut rng, 2, 1.5);
            let g = grad_u_mixture(&th, &ds, &batch, scale, &prior, weight);
            rel_err(&g, &central_difference(neg_log, &th))
        })
        .fold(0.0, f64::max)
}

pub fn logistic_fd_error() -> f64 {
    let ds = synthesize_binary_classification(80, 6, 0.4, 9).unwrap();
    let batch: Vec<usize> = (0..80).collect();
    let (scale, weight) = (2.0, 0.5);
    let neg_log = |w: &DVector<f64>| {
        let mut u = 0.0;
        for &r in &batch {
            let x = DVector::from_column_slice(ds.row(r));
            u += (1.0 + (-ds.target(r) * x.dot(w)).exp()).ln();
        }
        scale * u + weight * w.lp_norm(1)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < FD_POINTS {
        let w = random_point(&mut rng, 6, 1.0);
        // the L1 term has kinks at zero; stay clear of them
        if w.iter().any(|v| v.abs() < 1e-2) {
            continue;
        }
        let g = grad_u_logistic(&w, &ds, &batch, scale, weight).unwrap();
        worst = worst.max(rel_err(&g, &central_difference(neg_log, &w)));
        checked += 1;
    }
    worst
}

/// Runs a one-agent network and a hand-written ULA loop side by side for
/// `steps` iterations. Returns the first step where they differ bitwise.
pub fn first_ula_mismatch(steps: usize, seed: u64) -> Option<usize> {
    let sigma = 1.0;
    let ds = generate_linreg_data(200, 2, sigma, &[1.0, -1.0], 3).unwrap();
    let prior = GaussianDist::standard(2);
    let pot = LinRegPotential::partitioned(ds.clone(), 1, prior.clone(), sigma, 1, 3).unwrap();
    let schedule = StepSchedule::Harmonic { alpha0: 0.002 };
    let mut sampler = Sampler::new(&pot, schedule, NoiseModel::new(seed)).unwrap();
    let graph = DirectedGraph::empty(1).unwrap();

    let term = PriorTerm::from_gaussian(&prior, 1.0).unwrap();
    let shard = pot.shards[0].indices.clone();
    let mut rng = agent_rng(seed, 0);
    let mut x = DVector::zeros(2);
    for t in 0..steps {
        let alpha = schedule.step_size(t + 1);
        let (batch, scale) = sample_batch(&shard, 1, &mut rng);
        let g = grad_u_linreg(&x, &ds, &batch, scale, &term, sigma);
        let s = (2.0 * alpha).sqrt();
        let r: Vec<f64> = (0..2).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect();
        for k in 0..2 {
            x[k] = x[k] - alpha * g[k] + r[k];
        }
        sampler.step(&graph).unwrap();
        let got = &sampler.state().agents[0].x;
        if got[0].to_bits() != x[0].to_bits() || got[1].to_bits() != x[1].to_bits() {
            return Some(t);
        }
    }
    None
}

/// Largest gap between `x_bar(t+1)` and
/// `x_bar(t) - (alpha/m) sum_i grad_i + (1/m) sum_i noise_i` over `steps` steps.
pub fn average_identity_gap(steps: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let centers = (0..6).map(|_| random_point(&mut rng, 3, 2.0)).collect();
    let pot = QuadraticPotential::isotropic(centers).unwrap();
    let mut sampler = Sampler::new(&pot, StepSchedule::Harmonic { alpha0: 0.25 }, NoiseModel::new(5)).unwrap();
    let seq = GraphSequence::random(6, 2, 4, 0.2).unwrap();
    let mut worst: f64 = 0.0;
    for g in seq.iter().take(steps) {
        let rec = sampler.step(&g).unwrap();
        let m = 6.0;
        let mut expected = rec.mean_before.clone();
        for (gi, ni) in rec.gradients.iter().zip(&rec.noise) {
            expected += gi * (-rec.alpha / m) + ni / m;
        }
        worst = worst.max((sampler.state().average() - expected).amax());
    }
    worst
}

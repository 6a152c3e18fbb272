use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{monitor_bounds, ExperimentConfig, ExperimentKind, ModelKind};
use super::table::{cell, opt_cell, Table};
use crate::langevin::{NoiseModel, Potential, Sampler};
use crate::metrics::{
    check_gradient_bound, check_lemma3_bound, check_lemma4_bound, empirical_gaussian, roc_auc, w2_gaussian_bures,
    w2_gaussian_paper, BoundReport, GradientBoundReport, Trace,
};
use crate::models::{
    generate_linreg_data, generate_mixture_data, load_libsvm, synthesize_binary_classification, train_test_split,
    Dataset, GaussianDist, LinRegPotential, LogisticPotential, MixturePotential, MixturePrior, QuadraticPotential,
    A9A_DIM,
};
use crate::pushsum::NetworkState;
use crate::{Error, Result};

/// Window length of the gradient-norm monitor.
pub const GRADIENT_WINDOW: usize = 100;
/// Feature density of the synthetic logistic stand-in (a9a rows carry about
/// 14 active binary features out of 123).
pub const SURROGATE_DENSITY: f64 = 14.0 / 123.0;

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: Table,
    pub trace: Trace,
    pub reports: Vec<BoundReport>,
    pub gradient_report: Option<GradientBoundReport>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    match cfg.experiment {
        ExperimentKind::Linreg => run_linreg(cfg),
        ExperimentKind::Mixture => run_mixture(cfg),
        ExperimentKind::Logistic => run_logistic(cfg),
        ExperimentKind::Custom => run_generic(cfg),
    }
}

/// Ground-truth weights of the synthetic regression: `(1, -1, 1, -1, ...)`.
pub fn linreg_true_weights(d: usize) -> Vec<f64> {
    (0..d).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

pub fn linreg_potential(cfg: &ExperimentConfig) -> Result<LinRegPotential> {
    let data = generate_linreg_data(cfg.samples, cfg.dim, cfg.sigma, &linreg_true_weights(cfg.dim), cfg.data_seed)?;
    LinRegPotential::partitioned(data, cfg.agents, GaussianDist::standard(cfg.dim), cfg.sigma, cfg.batch, cfg.data_seed)
}

pub fn mixture_potential(cfg: &ExperimentConfig) -> Result<MixturePotential> {
    let prior = MixturePrior::default();
    let data = generate_mixture_data(cfg.samples, 0.0, 1.0, prior.sigma_x2.sqrt(), cfg.data_seed)?;
    MixturePotential::partitioned(data, cfg.agents, prior, cfg.batch, cfg.data_seed)
}

/// Per-agent quadratics `1/2 ||x - c_i||^2` with `c_i ~ N(0, I)`.
pub fn gaussian_potential(cfg: &ExperimentConfig) -> Result<QuadraticPotential> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.data_seed);
    let centers = (0..cfg.agents)
        .map(|_| DVector::from_fn(cfg.dim, |_, _| StandardNormal.sample(&mut rng)))
        .collect();
    QuadraticPotential::isotropic(centers)
}

/// Where the logistic data came from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(std::path::PathBuf),
    Surrogate { seed: u64 },
}

/// Train/test split for the logistic experiment.
pub fn logistic_data(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset, DataSource)> {
    let (full, source) = match load_libsvm(&cfg.dataset, Some(A9A_DIM)) {
        Ok(ds) => (ds, DataSource::File(cfg.dataset.clone())),
        Err(Error::DatasetMissing { .. }) if cfg.surrogate => (
            synthesize_binary_classification(cfg.samples, cfg.dim, SURROGATE_DENSITY, cfg.data_seed)?,
            DataSource::Surrogate { seed: cfg.data_seed },
        ),
        Err(e) => return Err(e),
    };
    let (train, test) = train_test_split(&full, cfg.test_fraction, cfg.split_seed)?;
    if cfg.agents > train.len() {
        return Err(Error::Config(format!("more agents ({}) than training rows ({})", cfg.agents, train.len())));
    }
    let positives = test.targets().iter().filter(|&&y| y > 0.0).count();
    if positives == 0 || positives == test.len() {
        return Err(Error::Data("test split holds a single class".into()));
    }
    Ok((train, test, source))
}

fn sampler<'a>(cfg: &ExperimentConfig, pot: &'a dyn Potential) -> Result<Sampler<'a>> {
    let noise = NoiseModel { seed: cfg.seed, grad_noise_var: cfg.noise_var, inject: true };
    Sampler::new(pot, cfg.step_schedule()?, noise)
}

fn run_trace<F>(cfg: &ExperimentConfig, pot: &dyn Potential, names: Vec<String>, observe: F) -> Result<Trace>
where
    F: FnMut(&NetworkState) -> Vec<f64>,
{
    let seq = cfg.graph_sequence()?;
    sampler(cfg, pot)?.run(&seq, cfg.iters, cfg.stride, names, observe)
}

/// Bound monitors with the closed-form mixing constants and the empirical
/// perturbation bound.
pub fn monitor_reports(trace: &Trace, agents: usize, window: usize) -> Result<(Vec<BoundReport>, GradientBoundReport)> {
    let b = monitor_bounds(agents, window)?;
    let d_hat = trace.monitor.max_perturbation_norm();
    let reports = vec![
        check_lemma3_bound(&trace.monitor, b.delta_lower, b.lambda_upper)?,
        check_lemma4_bound(&trace.monitor, b.delta_lower, b.lambda_upper, d_hat)?,
    ];
    Ok((reports, check_gradient_bound(&trace.monitor, GRADIENT_WINDOW)?))
}

fn finish(cfg: &ExperimentConfig, mut table: Table, trace: Trace, extra: Vec<String>) -> Result<RunOutput> {
    let mut comments = cfg.metadata()?;
    comments.extend(extra);
    let (reports, gradient_report) = if cfg.monitors {
        let (r, g) = monitor_reports(&trace, cfg.agents, cfg.window)?;
        let b = monitor_bounds(cfg.agents, cfg.window)?;
        comments.push(format!(
            "monitor delta={:e} lambda={} d_hat={:e}",
            b.delta_lower,
            b.lambda_upper,
            trace.monitor.max_perturbation_norm()
        ));
        comments.extend(r.iter().map(|r| format!("monitor {}", r.summary())));
        comments.push(format!(
            "monitor gradient_window_means window={} windows={} max_growth={:.6} violated={}",
            g.window,
            g.means.first().map_or(0, Vec::len),
            g.max_growth,
            g.violated
        ));
        (r, Some(g))
    } else {
        (Vec::new(), None)
    };
    table.comments = comments;
    Ok(RunOutput { table, trace, reports, gradient_report })
}

fn agent_cols(prefix: &str, m: usize) -> impl Iterator<Item = String> + '_ {
    (0..m).map(move |i| format!("{prefix}_agent_{i}"))
}

/// `(additive, bures)` distances of one agent at one record.
pub type W2Pair = (f64, f64);

/// Per-record, per-agent `(additive, bures)` W2 between a Gaussian fit of the
/// agent's last `fit_window` recorded estimates `z_i` and `target`. `None`
/// until enough samples exist.
pub fn agent_w2_series(trace: &Trace, target: &GaussianDist, fit_window: usize) -> Result<Vec<Option<Vec<W2Pair>>>> {
    let d = target.dim();
    let mut out = Vec::with_capacity(trace.records.len());
    for k in 0..trace.records.len() {
        let lo = (k + 1).saturating_sub(fit_window);
        if k + 1 - lo < d + 1 {
            out.push(None);
            continue;
        }
        let mut per_agent = Vec::with_capacity(trace.num_agents);
        for i in 0..trace.num_agents {
            let samples: Vec<DVector<f64>> = trace.records[lo..=k].iter().map(|r| r.estimates[i].clone()).collect();
            let fit = empirical_gaussian(&samples)?;
            per_agent.push((w2_gaussian_paper(&fit, target)?, w2_gaussian_bures(&fit, target)?));
        }
        out.push(Some(per_agent));
    }
    Ok(out)
}

pub fn run_linreg(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let pot = linreg_potential(cfg)?;
    let posterior = pot.posterior()?;
    let trace = run_trace(cfg, &pot, Vec::new(), |_| Vec::new())?;
    let w2 = agent_w2_series(&trace, &posterior, cfg.fit_window)?;
    let m = cfg.agents;
    let mut header: Vec<String> = ["t", "alpha", "w2_additive", "w2_bures"].map(String::from).to_vec();
    header.extend(agent_cols("consensus_error", m));
    let mut table = Table::new(header);
    for (rec, w) in trace.records.iter().zip(&w2) {
        let mean = |f: fn(&(f64, f64)) -> f64| w.as_ref().map(|v| v.iter().map(f).sum::<f64>() / m as f64);
        let mut row = vec![rec.t.to_string(), cell(rec.alpha), opt_cell(mean(|p| p.0)), opt_cell(mean(|p| p.1))];
        row.extend(rec.consensus_error.iter().map(|&e| cell(e)));
        table.push_row(row);
    }
    let post = format!(
        "posterior_mean={} posterior_cov={}",
        fmt_vec(posterior.mean.as_slice()),
        fmt_vec(posterior.cov.as_slice())
    );
    finish(cfg, table, trace, vec![post])
}

pub fn run_mixture(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let pot = mixture_potential(cfg)?;
    let trace = run_trace(cfg, &pot, Vec::new(), |_| Vec::new())?;
    let m = cfg.agents;
    let mut header: Vec<String> = vec!["t".into(), "alpha".into()];
    for i in 0..m {
        header.push(format!("theta1_agent_{i}"));
        header.push(format!("theta2_agent_{i}"));
    }
    header.extend(agent_cols("consensus_error", m));
    let mut table = Table::new(header);
    for rec in &trace.records {
        let mut row = vec![rec.t.to_string(), cell(rec.alpha)];
        for z in &rec.estimates {
            row.push(cell(z[0]));
            row.push(cell(z[1]));
        }
        row.extend(rec.consensus_error.iter().map(|&e| cell(e)));
        table.push_row(row);
    }
    finish(cfg, table, trace, Vec::new())
}

/// Test-set ROC-AUC of the linear scores `X w`.
pub fn test_auc(test: &Dataset, features: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    let scores = features * w;
    roc_auc(scores.as_slice(), test.targets()).unwrap_or(f64::NAN)
}

pub fn run_logistic(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let (train, test, source) = logistic_data(cfg)?;
    let features = DMatrix::from_row_slice(test.len(), test.dim(), test.features());
    let pot = LogisticPotential::partitioned(train, cfg.agents, cfg.batch, cfg.data_seed)?;
    let m = cfg.agents;
    let mut names: Vec<String> = agent_cols("auc", m).collect();
    names.push("auc_mean".into());
    let trace = run_trace(cfg, &pot, names.clone(), |state| {
        let mut aucs: Vec<f64> = state.agents.iter().map(|a| test_auc(&test, &features, &a.z)).collect();
        aucs.push(aucs.iter().sum::<f64>() / m as f64);
        aucs
    })?;
    let mut header: Vec<String> = vec!["t".into(), "alpha".into()];
    header.extend(names);
    header.extend(agent_cols("consensus_error", m));
    let mut table = Table::new(header);
    for rec in &trace.records {
        let mut row = vec![rec.t.to_string(), cell(rec.alpha)];
        row.extend(rec.metrics.iter().map(|&v| cell(v)));
        row.extend(rec.consensus_error.iter().map(|&e| cell(e)));
        table.push_row(row);
    }
    let src = match source {
        DataSource::File(p) => format!("dataset={}", p.display()),
        DataSource::Surrogate { seed } => format!("dataset=surrogate seed={seed} density={SURROGATE_DENSITY}"),
    };
    let sizes = format!("train_rows={} test_rows={}", pot.data.len(), test.len());
    finish(cfg, table, trace, vec![src, sizes])
}

pub fn run_generic(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let pot: Box<dyn Potential> = match cfg.model {
        ModelKind::Gaussian => Box::new(gaussian_potential(cfg)?),
        ModelKind::Linreg => Box::new(linreg_potential(cfg)?),
        ModelKind::Mixture => Box::new(mixture_potential(cfg)?),
        ModelKind::Logistic => {
            let (train, _, _) = logistic_data(cfg)?;
            Box::new(LogisticPotential::partitioned(train, cfg.agents, cfg.batch, cfg.data_seed)?)
        }
    };
    let trace = run_trace(cfg, pot.as_ref(), Vec::new(), |_| Vec::new())?;
    let (m, d) = (cfg.agents, pot.dim());
    let mut header: Vec<String> = vec!["t".into(), "alpha".into()];
    for i in 0..m {
        header.extend((0..d).map(|k| format!("x{k}_agent_{i}")));
    }
    for i in 0..m {
        header.extend((0..d).map(|k| format!("z{k}_agent_{i}")));
    }
    header.extend(agent_cols("consensus_error", m));
    header.extend(agent_cols("z_deviation", m));
    let mut table = Table::new(header);
    for rec in &trace.records {
        let mut row = vec![rec.t.to_string(), cell(rec.alpha)];
        for x in rec.samples.iter().chain(&rec.estimates) {
            row.extend(x.iter().map(|&v| cell(v)));
        }
        row.extend(rec.consensus_error.iter().map(|&e| cell(e)));
        row.extend(rec.z_deviation.iter().map(|&e| cell(e)));
        table.push_row(row);
    }
    let mut extra = vec![format!("model_dim={d}")];
    if cfg.model == ModelKind::Gaussian {
        let target = gaussian_potential(cfg)?.target()?;
        extra.push(format!("target_mean={}", fmt_vec(target.mean.as_slice())));
    }
    finish(cfg, table, trace, extra)
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

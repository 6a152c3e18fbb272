use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use crate::graph::{
    check_b_strong_connectivity, generate_graph_sequence, spectral_bounds, GraphSequence, SequenceKind, SpectralBounds,
};
use crate::langevin::StepSchedule;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn is_on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentKind {
    Linreg,
    Mixture,
    Logistic,
    Custom,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Linreg => "linreg",
            ExperimentKind::Mixture => "mixture",
            ExperimentKind::Logistic => "logistic",
            ExperimentKind::Custom => "custom",
        }
    }
}

/// Model families available to the generic `run` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gaussian,
    Linreg,
    Mixture,
    Logistic,
}

impl ModelKind {
    pub const NAMES: [&'static str; 4] = ["gaussian", "linreg", "mixture", "logistic"];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(ModelKind::Gaussian),
            "linreg" => Ok(ModelKind::Linreg),
            "mixture" => Ok(ModelKind::Mixture),
            "logistic" => Ok(ModelKind::Logistic),
            other => Err(Error::Config(format!(
                "unknown model {other:?} (registered: {})",
                Self::NAMES.join(", ")
            ))),
        }
    }

    fn experiment(self) -> ExperimentKind {
        match self {
            ModelKind::Gaussian => ExperimentKind::Custom,
            ModelKind::Linreg => ExperimentKind::Linreg,
            ModelKind::Mixture => ExperimentKind::Mixture,
            ModelKind::Logistic => ExperimentKind::Logistic,
        }
    }
}

/// One layer of settings. The same struct is read from the TOML config file
/// and from command-line flags, so every key has a flag of the same name.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// Master seed for agent random streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of agents m.
    #[arg(long)]
    pub agents: Option<usize>,
    /// Number of iterations T.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Record every k-th iteration.
    #[arg(long)]
    pub stride: Option<usize>,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// libsvm training file for the logistic experiment.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Attach bound-monitor reports to the output.
    #[arg(long)]
    pub monitors: Option<Switch>,
    /// Model for the generic runner: gaussian | linreg | mixture | logistic.
    #[arg(long)]
    pub model: Option<String>,

    /// Graph sequence: static | random.
    #[arg(long)]
    pub graph: Option<String>,
    /// Connectivity window B.
    #[arg(long)]
    pub window: Option<usize>,
    /// Seed of the graph sequence (defaults to the master seed).
    #[arg(long)]
    pub graph_seed: Option<u64>,
    /// Extra-edge probability of the random sequence.
    #[arg(long)]
    pub edge_prob: Option<f64>,

    /// Step-size schedule: harmonic | power | endpoints.
    #[arg(long)]
    pub schedule: Option<String>,
    /// alpha(0) (harmonic), numerator a (power) or start value (endpoints).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha0: Option<f64>,
    /// Offset b of the power schedule.
    #[arg(long, allow_hyphen_values = true)]
    pub offset: Option<f64>,
    /// Exponent of the power and endpoints schedules.
    #[arg(long, allow_hyphen_values = true)]
    pub exponent: Option<f64>,
    /// Final step size alpha(T) of the endpoints schedule.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_end: Option<f64>,
    /// Declared gradient-noise variance; enforces sqrt(alpha(0)) <= 1/var.
    #[arg(long, allow_hyphen_values = true)]
    pub noise_var: Option<f64>,

    /// Minibatch size per agent and iteration.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Number of synthetic data points n.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Parameter dimension of synthetic models.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Observation noise standard deviation (linreg).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Seed for data generation and sharding (defaults to the master seed).
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Seed of the train/test split (defaults to the master seed).
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Held-out fraction for the logistic experiment.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Use a synthetic stand-in when the logistic dataset is missing.
    #[arg(long)]
    pub surrogate: Option<Switch>,
    /// Trailing number of recorded samples per agent used for Gaussian fits.
    #[arg(long)]
    pub fit_window: Option<usize>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($field:ident),* $(,)?) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Values set in `other` replace those in `self`.
    pub fn overlay(mut self, other: &Settings) -> Self {
        overlay!(
            self, other, seed, agents, iters, stride, out, dataset, monitors, model, graph, window, graph_seed,
            edge_prob, schedule, alpha0, offset, exponent, alpha_end, noise_var, batch, samples, dim, sigma,
            data_seed, split_seed, test_fraction, surrogate, fit_window,
        );
        self
    }
}

/// Schedule as configured, before it is turned into a [`StepSchedule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleSpec {
    Harmonic { alpha0: f64 },
    Power { alpha0: f64, offset: f64, exponent: f64 },
    /// Power schedule whose `a`, `b` are solved so that `alpha(0) = start`
    /// and `alpha(T) = end`.
    Endpoints { start: f64, end: f64, exponent: f64 },
}

impl ScheduleSpec {
    pub fn resolve(&self, iters: usize) -> Result<StepSchedule> {
        let s = match *self {
            ScheduleSpec::Harmonic { alpha0 } => StepSchedule::Harmonic { alpha0 },
            ScheduleSpec::Power { alpha0, offset, exponent } => StepSchedule::Power { alpha0, offset, exponent },
            ScheduleSpec::Endpoints { start, end, exponent } => {
                StepSchedule::power_from_endpoints(start, end, iters.max(1), exponent)?
            }
        };
        s.validate()?;
        Ok(s)
    }
}

/// A fully resolved, validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelKind,
    pub seed: u64,
    pub agents: usize,
    pub iters: usize,
    pub stride: usize,
    pub out: Option<PathBuf>,
    pub dataset: PathBuf,
    pub monitors: bool,
    pub graph: SequenceKind,
    pub window: usize,
    pub graph_seed: u64,
    pub edge_prob: f64,
    pub schedule: ScheduleSpec,
    pub noise_var: Option<f64>,
    pub batch: usize,
    pub samples: usize,
    pub dim: usize,
    pub sigma: f64,
    pub data_seed: u64,
    pub split_seed: u64,
    pub test_fraction: f64,
    pub surrogate: bool,
    pub fit_window: usize,
}

/// Per-experiment defaults.
struct Defaults {
    agents: usize,
    iters: usize,
    stride: usize,
    schedule: ScheduleSpec,
    batch: usize,
    samples: usize,
    dim: usize,
}

fn defaults(kind: ModelKind) -> Defaults {
    match kind {
        ModelKind::Linreg => Defaults {
            agents: 4,
            iters: 200,
            stride: 1,
            schedule: ScheduleSpec::Harmonic { alpha0: LINREG_ALPHA0 },
            batch: 1,
            samples: 800,
            dim: 2,
        },
        ModelKind::Mixture => Defaults {
            agents: 4,
            iters: 10_000,
            stride: 1,
            schedule: ScheduleSpec::Endpoints { start: 0.01, end: 0.0001, exponent: 0.65 },
            batch: 1,
            samples: 800,
            dim: 2,
        },
        ModelKind::Logistic => Defaults {
            agents: 4,
            iters: 1000,
            stride: 10,
            schedule: ScheduleSpec::Power { alpha0: 0.008, offset: 12.0, exponent: 0.45 },
            batch: 32,
            samples: SURROGATE_SAMPLES,
            dim: crate::models::A9A_DIM,
        },
        ModelKind::Gaussian => Defaults {
            agents: 4,
            iters: 1000,
            stride: 1,
            // mu = L = 1 gives min{1/(2L), mu/(4L^2)} = 1/4
            schedule: ScheduleSpec::Harmonic { alpha0: 0.25 },
            batch: 1,
            samples: 0,
            dim: 2,
        },
    }
}

/// Harmonic `alpha(0)` of the linear-regression experiment.
pub const LINREG_ALPHA0: f64 = 0.01;
/// Observation noise of the linear-regression experiment.
pub const LINREG_SIGMA: f64 = 1.0;
/// Size of the synthetic logistic stand-in (the size of a9a).
pub const SURROGATE_SAMPLES: usize = 32_561;
pub const DEFAULT_DATASET: &str = "data/a9a";

fn schedule_from(s: &Settings, fallback: ScheduleSpec) -> Result<ScheduleSpec> {
    let kind = match &s.schedule {
        None => {
            return Ok(match fallback {
                ScheduleSpec::Harmonic { alpha0 } => ScheduleSpec::Harmonic { alpha0: s.alpha0.unwrap_or(alpha0) },
                ScheduleSpec::Power { alpha0, offset, exponent } => ScheduleSpec::Power {
                    alpha0: s.alpha0.unwrap_or(alpha0),
                    offset: s.offset.unwrap_or(offset),
                    exponent: s.exponent.unwrap_or(exponent),
                },
                ScheduleSpec::Endpoints { start, end, exponent } => ScheduleSpec::Endpoints {
                    start: s.alpha0.unwrap_or(start),
                    end: s.alpha_end.unwrap_or(end),
                    exponent: s.exponent.unwrap_or(exponent),
                },
            })
        }
        Some(k) => k.as_str(),
    };
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Config(format!("schedule {kind} needs {name}")));
    match kind {
        "harmonic" => Ok(ScheduleSpec::Harmonic { alpha0: need(s.alpha0, "alpha0")? }),
        "power" => Ok(ScheduleSpec::Power {
            alpha0: need(s.alpha0, "alpha0")?,
            offset: need(s.offset, "offset")?,
            exponent: need(s.exponent, "exponent")?,
        }),
        "endpoints" => Ok(ScheduleSpec::Endpoints {
            start: need(s.alpha0, "alpha0")?,
            end: need(s.alpha_end, "alpha-end")?,
            exponent: need(s.exponent, "exponent")?,
        }),
        other => Err(Error::Config(format!("unknown schedule {other:?} (expected harmonic | power | endpoints)"))),
    }
}

/// Closed-form mixing bounds for the monitors, or a config error when they
/// round to `delta = 0` or `lambda = 1` in f64.
pub fn monitor_bounds(agents: usize, window: usize) -> Result<SpectralBounds> {
    let b = spectral_bounds(agents, window)?;
    if !(b.delta_lower > 0.0 && b.lambda_upper < 1.0) {
        return Err(Error::Config(format!(
            "closed-form mixing bounds for m={agents}, B={window} are not representable in f64 \
             (ln delta = {:.1}); run with --monitors off",
            b.ln_delta_lower
        )));
    }
    Ok(b)
}

impl ExperimentConfig {
    /// Defaults for `experiment`, overridden by `settings`. With the custom
    /// experiment the model comes from `settings.model` (default gaussian).
    pub fn resolve(experiment: ExperimentKind, settings: &Settings) -> Result<Self> {
        let model = match experiment {
            ExperimentKind::Linreg => ModelKind::Linreg,
            ExperimentKind::Mixture => ModelKind::Mixture,
            ExperimentKind::Logistic => ModelKind::Logistic,
            ExperimentKind::Custom => ModelKind::parse(settings.model.as_deref().unwrap_or("gaussian"))?,
        };
        if experiment != ExperimentKind::Custom {
            if let Some(name) = &settings.model {
                if ModelKind::parse(name)?.experiment() != experiment {
                    return Err(Error::Config(format!("model {name:?} conflicts with the {} subcommand", experiment.name())));
                }
            }
        }
        let d = defaults(model);
        let seed = settings.seed.unwrap_or(0);
        let graph = match settings.graph.as_deref() {
            None => SequenceKind::SeededRandom,
            Some(g) => g.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
        };
        let mut cfg = ExperimentConfig {
            experiment,
            model,
            seed,
            agents: settings.agents.unwrap_or(d.agents),
            iters: settings.iters.unwrap_or(d.iters),
            stride: settings.stride.unwrap_or(d.stride),
            out: settings.out.clone(),
            dataset: settings.dataset.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_DATASET)),
            monitors: false,
            graph,
            window: settings.window.unwrap_or(match graph {
                SequenceKind::Static => 1,
                SequenceKind::SeededRandom => 2,
            }),
            graph_seed: settings.graph_seed.unwrap_or(seed),
            edge_prob: settings.edge_prob.unwrap_or(0.2),
            schedule: schedule_from(settings, d.schedule)?,
            noise_var: settings.noise_var,
            batch: settings.batch.unwrap_or(d.batch),
            samples: settings.samples.unwrap_or(d.samples),
            dim: settings.dim.unwrap_or(d.dim),
            sigma: settings.sigma.unwrap_or(LINREG_SIGMA),
            data_seed: settings.data_seed.unwrap_or(seed),
            split_seed: settings.split_seed.unwrap_or(seed),
            test_fraction: settings.test_fraction.unwrap_or(0.2),
            surrogate: settings.surrogate.map(Switch::is_on).unwrap_or(false),
            fit_window: settings.fit_window.unwrap_or(50),
        };
        // on by default for the generic runner when the bounds are usable
        cfg.monitors = settings.monitors.map(Switch::is_on).unwrap_or(
            experiment == ExperimentKind::Custom && monitor_bounds(cfg.agents, cfg.window).is_ok(),
        );
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn step_schedule(&self) -> Result<StepSchedule> {
        self.schedule.resolve(self.iters)
    }

    /// The configured graph sequence.
    pub fn graph_sequence(&self) -> Result<GraphSequence> {
        match self.graph {
            SequenceKind::Static => {
                if self.window != 1 {
                    return Err(Error::Config("a static graph uses window = 1".into()));
                }
                generate_graph_sequence(SequenceKind::Static, self.agents, 1, self.graph_seed)
            }
            SequenceKind::SeededRandom => GraphSequence::random(self.agents, self.window, self.graph_seed, self.edge_prob),
        }
    }

    /// Checks everything that can be checked before data is loaded.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.agents == 0 {
            return fail("agents must be >= 1".into());
        }
        if self.stride == 0 {
            return fail("stride must be >= 1".into());
        }
        if self.window == 0 {
            return fail("window must be >= 1".into());
        }
        if self.batch == 0 {
            return fail("batch must be >= 1".into());
        }
        if self.dim == 0 {
            return fail("dim must be >= 1".into());
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return fail(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return fail(format!("test-fraction must lie in (0, 1), got {}", self.test_fraction));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return fail(format!("edge-prob must lie in [0, 1], got {}", self.edge_prob));
        }
        if self.monitors {
            monitor_bounds(self.agents, self.window)?;
        }
        if self.model == ModelKind::Linreg && self.fit_window <= self.dim {
            return fail(format!("fit-window must exceed dim ({} <= {})", self.fit_window, self.dim));
        }
        if self.model == ModelKind::Mixture && self.dim != 2 {
            return fail("the mixture model has dim = 2".into());
        }
        if matches!(self.model, ModelKind::Linreg | ModelKind::Mixture) && self.agents > self.samples {
            return fail(format!("more agents ({}) than data points ({})", self.agents, self.samples));
        }
        let schedule = self.step_schedule()?;
        crate::langevin::NoiseModel { seed: self.seed, grad_noise_var: self.noise_var, inject: true }.validate(&schedule)?;
        let seq = self.graph_sequence()?;
        let horizon = self.iters.max(self.window);
        if !check_b_strong_connectivity(&seq, horizon)? {
            return fail(format!(
                "graph sequence is not {}-strongly connected over {horizon} iterations",
                self.window
            ));
        }
        Ok(())
    }

    /// `# key=value` metadata lines written ahead of the CSV header.
    pub fn metadata(&self) -> Result<Vec<String>> {
        let schedule = self.step_schedule()?;
        let mut lines = vec![
            format!("experiment={}", self.experiment.name()),
            format!("seed={}", self.seed),
            format!("agents={}", self.agents),
            format!("iters={}", self.iters),
            format!("stride={}", self.stride),
            format!("graph={} window={} graph_seed={} edge_prob={}", self.graph, self.window, self.graph_seed, self.edge_prob),
            format!("schedule={schedule}"),
            format!("batch={}", self.batch),
        ];
        if let StepSchedule::Power { alpha0, offset, .. } = schedule {
            lines.push(format!("schedule_a={alpha0} schedule_b={offset}"));
        }
        match self.model {
            ModelKind::Gaussian => lines.push(format!("model=gaussian dim={}", self.dim)),
            ModelKind::Linreg => lines.push(format!(
                "model=linreg samples={} dim={} sigma={} data_seed={} fit_window={}",
                self.samples, self.dim, self.sigma, self.data_seed, self.fit_window
            )),
            ModelKind::Mixture => {
                lines.push(format!("model=mixture samples={} data_seed={}", self.samples, self.data_seed))
            }
            ModelKind::Logistic => lines.push(format!(
                "model=logistic data_seed={} split_seed={} test_fraction={}",
                self.data_seed, self.split_seed, self.test_fraction
            )),
        }
        Ok(lines)
    }
}

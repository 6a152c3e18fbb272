use nalgebra::DVector;

use crate::{Error, Result};

/// One recorded iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub alpha: f64,
    /// `x_i(t)` per agent.
    pub samples: Vec<DVector<f64>>,
    /// `z_i(t) = w_i(t) / y_i(t)` per agent, the de-biased local estimate
    /// (equal to `x_i(0)` at the initial record).
    pub estimates: Vec<DVector<f64>>,
    /// `||x_i(t) - x_bar(t)||^2` per agent.
    pub consensus_error: Vec<f64>,
    /// `||z_i(t) - x_bar(t-1)||` per agent (zero at the initial record).
    pub z_deviation: Vec<f64>,
    /// Values for [`Trace::metric_names`], in order.
    pub metrics: Vec<f64>,
}

/// Per-iteration quantities needed by the bound monitors, recorded at every
/// step regardless of thinning. Entry `s` describes step `s -> s+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monitor {
    /// `||z_i(s+1) - x_bar(s)||`.
    pub z_deviation: Vec<f64>,
    /// `||x_i(s+1) - w_i(s+1)||`, the perturbation added on top of mixing.
    pub perturbation_norm: Vec<f64>,
    /// `||grad U_i(z_i(s+1))||`.
    pub gradient_norm: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonitorSeries {
    /// `||x_i(0)||_1` per agent.
    pub initial_l1: Vec<f64>,
    pub steps: Vec<Monitor>,
}

impl MonitorSeries {
    pub fn push(&mut self, step: Monitor) {
        self.steps.push(step);
    }

    /// Largest perturbation norm over all agents and steps, the empirical
    /// stand-in for the gradient-bound constant.
    pub fn max_perturbation_norm(&self) -> f64 {
        self.steps
            .iter()
            .flat_map(|s| s.perturbation_norm.iter().copied())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub metric_names: Vec<String>,
    pub num_agents: usize,
    pub records: Vec<TraceRecord>,
    pub monitor: MonitorSeries,
}

impl Trace {
    pub fn new(metric_names: Vec<String>, num_agents: usize) -> Self {
        Self { metric_names, num_agents, records: Vec::new(), monitor: MonitorSeries::default() }
    }

    pub fn push(&mut self, record: TraceRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.t <= last.t {
                return Err(Error::arg(format!("trace times must increase ({} after {})", record.t, last.t)));
            }
        }
        if record.metrics.len() != self.metric_names.len() {
            return Err(Error::arg("metric values do not match metric names"));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn times(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// Series of a named metric, if present.
    pub fn metric(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.metric_names.iter().position(|n| n == name)?;
        Some(self.records.iter().map(|r| r.metrics[k]).collect())
    }

    /// Recorded `x` of one agent.
    pub fn agent_samples(&self, agent: usize) -> Vec<DVector<f64>> {
        self.records.iter().map(|r| r.samples[agent].clone()).collect()
    }

    /// Recorded `z` of one agent.
    pub fn agent_estimates(&self, agent: usize) -> Vec<DVector<f64>> {
        self.records.iter().map(|r| r.estimates[agent].clone()).collect()
    }

    /// Recorded network averages `x_bar(t)`.
    pub fn averages(&self) -> Vec<DVector<f64>> {
        self.records
            .iter()
            .map(|r| {
                let mut s = DVector::zeros(r.samples[0].len());
                for x in &r.samples {
                    s += x;
                }
                s / r.samples.len() as f64
            })
            .collect()
    }
}

use super::trace::MonitorSeries;
use crate::{Error, Result};

/// A monitored quantity against its theoretical bound over `t_first..=t_last`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub t_first: usize,
    pub t_last: usize,
    pub quantity: Vec<f64>,
    pub bound: Vec<f64>,
    pub violated: bool,
    /// `max_t quantity(t) / bound(t)`.
    pub max_ratio: f64,
    /// Smallest perturbation constant that would keep the bound valid, when
    /// the bound is linear in one.
    pub implied_constant: Option<f64>,
}

impl BoundReport {
    pub fn new(name: &str, t_first: usize, quantity: Vec<f64>, bound: Vec<f64>) -> Self {
        assert_eq!(quantity.len(), bound.len());
        let max_ratio = quantity
            .iter()
            .zip(&bound)
            .map(|(&q, &b)| if b > 0.0 { q / b } else if q > 0.0 { f64::INFINITY } else { 0.0 })
            .fold(0.0, f64::max);
        let t_last = (t_first + quantity.len()).saturating_sub(1);
        Self {
            name: name.to_owned(),
            t_first,
            t_last,
            quantity,
            bound,
            violated: max_ratio > 1.0,
            max_ratio,
            implied_constant: None,
        }
    }

    /// Same bound, with the monitored side multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let q = self.quantity.iter().map(|q| q * factor).collect();
        Self::new(&self.name, self.t_first, q, self.bound.clone())
    }

    /// One-line summary suitable for a CSV comment.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} t={}..{} violated={} max_ratio={:.6e}",
            self.name, self.t_first, self.t_last, self.violated, self.max_ratio
        );
        if let Some(c) = self.implied_constant {
            s.push_str(&format!(" implied_constant={c:.6e}"));
        }
        s
    }
}

fn check_constants(delta: f64, lambda: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) || !(0.0..1.0).contains(&lambda) {
        return Err(Error::arg(format!("need 0 < delta <= 1 and 0 <= lambda < 1, got {delta}, {lambda}")));
    }
    Ok(())
}

fn max_over_agents(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Pointwise consensus-deviation bound
/// `||z_i(t+1) - x_bar(t)|| <= (8/delta) (lambda^t sum_i ||x_i(0)||_1 +
/// sum_{s=1}^t lambda^(t-s) sum_i ||e_i(s)||)`, where `e(s)` is the
/// perturbation that produced `x(s)`. Checked for every `t` and agent; the
/// report carries the worst agent.
pub fn check_lemma3_bound(monitor: &MonitorSeries, delta: f64, lambda: f64) -> Result<BoundReport> {
    check_constants(delta, lambda)?;
    let x0: f64 = monitor.initial_l1.iter().sum();
    let c = 8.0 / delta;
    let mut quantity = Vec::with_capacity(monitor.steps.len());
    let mut bound = Vec::with_capacity(monitor.steps.len());
    let mut lam_t = 1.0;
    let mut acc = 0.0;
    for (t, step) in monitor.steps.iter().enumerate() {
        if t > 0 {
            let e: f64 = monitor.steps[t - 1].perturbation_norm.iter().sum();
            acc = lambda * acc + e;
            lam_t *= lambda;
        }
        quantity.push(max_over_agents(&step.z_deviation));
        bound.push(c * (lam_t * x0 + acc));
    }
    Ok(BoundReport::new("consensus_deviation", 0, quantity, bound))
}

/// Running-sum bound `sum_{t=1}^tau ||z_i(t+1) - x_bar(t)|| <=
/// (8/delta)(lambda/(1-lambda)) sum_i ||x_i(0)||_1 + (8/delta)(D m/(1-lambda))(1 + sqrt(tau))`
/// with `D = d_hat`, for every `tau >= 1`.
pub fn check_lemma4_bound(monitor: &MonitorSeries, delta: f64, lambda: f64, d_hat: f64) -> Result<BoundReport> {
    check_constants(delta, lambda)?;
    if !(d_hat >= 0.0) {
        return Err(Error::arg("D_hat must be nonnegative"));
    }
    let m = monitor.initial_l1.len() as f64;
    let x0: f64 = monitor.initial_l1.iter().sum();
    let c = 8.0 / delta;
    let head = c * lambda / (1.0 - lambda) * x0;
    let slope = c * m / (1.0 - lambda);
    let mut sums = vec![0.0; monitor.initial_l1.len()];
    let mut quantity = Vec::new();
    let mut bound = Vec::new();
    let mut implied: f64 = 0.0;
    for (tau, step) in monitor.steps.iter().enumerate().skip(1) {
        for (s, dev) in sums.iter_mut().zip(&step.z_deviation) {
            *s += dev;
        }
        let lhs = max_over_agents(&sums);
        let growth = slope * (1.0 + (tau as f64).sqrt());
        quantity.push(lhs);
        bound.push(head + growth * d_hat);
        implied = implied.max((lhs - head).max(0.0) / growth);
    }
    let mut report = BoundReport::new("running_deviation_sum", 1, quantity, bound);
    report.implied_constant = Some(implied);
    Ok(report)
}

/// Window means of per-agent gradient norms.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBoundReport {
    pub window: usize,
    /// `means[agent][k]`: mean of `||grad U_i(z_i)||` over window `k`.
    pub means: Vec<Vec<f64>>,
    /// Largest `mean_k / min_{j<k} mean_j` over agents and windows.
    pub max_growth: f64,
    /// `max_growth > 2`.
    pub violated: bool,
}

/// Boundedness surrogate for the gradient norms: over consecutive windows of
/// `window` steps, no window mean may exceed twice the smallest earlier one.
/// A trailing partial window is ignored.
pub fn check_gradient_bound(monitor: &MonitorSeries, window: usize) -> Result<GradientBoundReport> {
    if window == 0 {
        return Err(Error::arg("window must be positive"));
    }
    let m = monitor.initial_l1.len();
    let windows = monitor.steps.len() / window;
    let mut means = vec![Vec::with_capacity(windows); m];
    for k in 0..windows {
        let chunk = &monitor.steps[k * window..(k + 1) * window];
        for (i, row) in means.iter_mut().enumerate() {
            row.push(chunk.iter().map(|s| s.gradient_norm[i]).sum::<f64>() / window as f64);
        }
    }
    let mut max_growth: f64 = 0.0;
    for row in &means {
        let mut lowest = f64::INFINITY;
        for &v in row {
            if lowest.is_finite() {
                max_growth = max_growth.max(if lowest > 0.0 { v / lowest } else if v > 0.0 { f64::INFINITY } else { 1.0 });
            }
            lowest = lowest.min(v);
        }
    }
    Ok(GradientBoundReport { window, means, max_growth, violated: max_growth > 2.0 })
}

#[cfg(test)]
mod tests {
    use super::super::trace::Monitor;
    use super::*;

    fn series(initial: Vec<f64>, dev: &[&[f64]], pert: &[&[f64]]) -> MonitorSeries {
        MonitorSeries {
            initial_l1: initial,
            steps: dev
                .iter()
                .zip(pert)
                .map(|(d, p)| Monitor { z_deviation: d.to_vec(), perturbation_norm: p.to_vec(), gradient_norm: p.to_vec() })
                .collect(),
        }
    }

    #[test]
    fn report_flags_ratio_above_one() {
        let r = BoundReport::new("q", 0, vec![1.0, 2.0], vec![2.0, 3.0]);
        assert!(!r.violated);
        assert!((r.max_ratio - 2.0 / 3.0).abs() < 1e-15);
        assert!(r.scaled(2.0).violated);
        assert_eq!(r.t_last, 1);
    }

    #[test]
    fn pointwise_bound_by_hand() {
        let s = series(vec![1.0, 3.0], &[&[0.5, 0.1], &[0.2, 0.3], &[0.0, 0.0]], &[&[1.0, 1.0], &[0.5, 0.0], &[0.0, 0.0]]);
        let r = check_lemma3_bound(&s, 0.5, 0.5).unwrap();
        assert_eq!(r.quantity, vec![0.5, 0.3, 0.0]);
        // 16 * (4), 16 * (0.5*4 + 2), 16 * (0.25*4 + 0.5*2 + 0.5)
        assert_eq!(r.bound, vec![64.0, 64.0, 40.0]);
        assert!(!r.violated);
    }

    #[test]
    fn running_sum_bound_by_hand() {
        let s = series(vec![2.0], &[&[9.0], &[1.0], &[3.0]], &[&[0.0], &[0.0], &[0.0]]);
        let r = check_lemma4_bound(&s, 1.0, 0.0, 0.1).unwrap();
        assert_eq!(r.quantity, vec![1.0, 4.0]);
        assert_eq!(r.bound, vec![8.0 * 0.1 * 2.0, 8.0 * 0.1 * (1.0 + 2f64.sqrt())]);
        assert!(r.violated);
        let c = r.implied_constant.unwrap();
        assert!((c - 4.0 / (8.0 * (1.0 + 2f64.sqrt()))).abs() < 1e-12);
        let again = check_lemma4_bound(&s, 1.0, 0.0, c).unwrap();
        assert!(again.max_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn rejects_bad_constants() {
        let s = series(vec![0.0], &[&[0.0]], &[&[0.0]]);
        assert!(check_lemma3_bound(&s, 0.0, 0.5).is_err());
        assert!(check_lemma4_bound(&s, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn gradient_growth() {
        let steps: Vec<f64> = [4.0, 4.0, 2.0, 2.0, 3.0, 3.0, 5.0].to_vec();
        let s = MonitorSeries {
            initial_l1: vec![0.0],
            steps: steps
                .iter()
                .map(|&g| Monitor { z_deviation: vec![0.0], perturbation_norm: vec![0.0], gradient_norm: vec![g] })
                .collect(),
        };
        let r = check_gradient_bound(&s, 2).unwrap();
        assert_eq!(r.means, vec![vec![4.0, 2.0, 3.0]]);
        assert_eq!(r.max_growth, 1.5);
        assert!(!r.violated);
    }
}

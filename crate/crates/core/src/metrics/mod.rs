//! Diagnostics: distances between Gaussians, ROC-AUC, bound monitors and
//! convergence-rate fits.

mod bounds;
mod mixing;
mod rate;
mod roc;
mod trace;
mod wasserstein;

pub use bounds::{check_gradient_bound, check_lemma3_bound, check_lemma4_bound, BoundReport, GradientBoundReport};
pub use mixing::{ergodicity_coefficient, estimate_delta_lambda};
pub use rate::rate_fit;
pub use roc::roc_auc;
pub use trace::{Monitor, MonitorSeries, Trace, TraceRecord};
pub use wasserstein::{empirical_gaussian, w2_gaussian_bures, w2_gaussian_paper, FIT_REGULARIZATION};

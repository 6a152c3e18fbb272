//! Experiment potentials, synthetic data and dataset plumbing.

mod data;
mod gaussian;
pub mod libsvm;
pub mod linreg;
pub mod logistic;
pub mod mixture;
pub mod quadratic;

pub use data::{partition, sample_batch, train_test_split, Dataset, PartitionMode, Shard};
pub use gaussian::{sym_sqrt, GaussianDist, PriorTerm};
pub use libsvm::{load_libsvm, parse_libsvm, write_libsvm, A9A_DIM};
pub use linreg::{generate_linreg_data, grad_u_linreg, linreg_posterior, LinRegPotential};
pub use logistic::{grad_u_logistic, synthesize_binary_classification, LogisticPotential};
pub use mixture::{generate_mixture_data, grad_u_mixture, MixturePotential, MixturePrior};
pub use quadratic::QuadraticPotential;

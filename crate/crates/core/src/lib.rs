//! Decentralized Langevin dynamics over directed, time-varying graphs.
//!
//! Every agent holds a private potential `U_i` and the network samples from the
//! density proportional to `exp(-sum_i U_i)`. Agents communicate only through
//! a column-stochastic mixing step (push-sum), so the communication graph may
//! be directed and change at every iteration as long as it is B-strongly
//! connected.
//!
//! The crate is organized bottom-up:
//!
//! - [`graph`]: directed graphs, graph sequences, connectivity checks and mixing matrices.
//! - [`pushsum`]: per-agent `(x, y, w, z)` state and the push-sum mixing step.
//! - [`langevin`]: step-size schedules, the perturbed Langevin update and the run loop.
//! - [`models`]: the three experiment potentials, data generation and libsvm ingestion.
//! - [`metrics`]: Wasserstein distances, ROC-AUC, bound monitors and rate fits.
//! - [`cli`]: config-driven experiment runner and CSV output.
//!
//! Per-agent work inside an iteration runs through [`Execution`], which uses
//! rayon when the `parallel` feature is enabled. Results do not depend on the
//! execution mode.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
mod error;
mod exec;
pub mod graph;
pub mod langevin;
pub mod metrics;
pub mod models;
pub mod pushsum;

pub use error::{Error, Result};
pub use exec::Execution;

pub use graph::{DirectedGraph, GraphSequence, MixingMatrix, SequenceKind, SpectralBounds};
pub use langevin::{Potential, PotentialProps, Sampler, StepSchedule};
pub use metrics::Trace;
pub use models::{Dataset, GaussianDist, Shard};
pub use pushsum::{AgentState, NetworkState};

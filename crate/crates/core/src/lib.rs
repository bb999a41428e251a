//! Bayesian estimation of sparse precision matrices in Gaussian graphical
//! models.
//!
//! Two Gibbs samplers target the same posterior under element-wise
//! shrinkage priors (graphical horseshoe, Bayesian graphical lasso):
//!
//! * [`rt_sampler`] works on the reverse-telescoped parameterisation and
//!   costs `O(max(n²p², pn³, p³))` per sweep;
//! * [`cyclical_sampler`] is the classic column-wise sampler driven by the
//!   scatter matrix, costing `O(p⁴)` per sweep.
//!
//! Supporting modules provide the telescoping bijection, random variate
//! generators, priors, synthetic data, posterior summaries and a
//! benchmark harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod benchmark;
pub mod chain;
pub mod cyclical_sampler;
pub mod data;
pub mod error;
pub mod linalg;
pub mod priors;
pub mod rand_dist;
pub mod rt_sampler;
pub mod simulation;
pub mod telescoping;

pub use chain::{ChainConfig, ChainResult};
pub use data::{DataMatrix, ScatterMatrix};
pub use error::{Error, Result};
pub use priors::{make_prior, PriorKind, PriorSpec, ShrinkageState};
pub use rand_dist::RngStream;
pub use telescoping::{PrecisionMatrix, TelescopedMatrix, WorkspaceMatrix};

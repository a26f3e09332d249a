//! Gaussian-process regression with spectral mixture kernels whose
//! hyperparameters are either optimised (ML-II) or marginalised with nested
//! sampling or Hamiltonian Monte Carlo.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernel`] and [`gp`] evaluate the spectral mixture kernel, the exact
//!   marginal likelihood with analytic gradients and the single-setting
//!   posterior predictive.
//! * [`priors`] maps the unit hypercube onto hyperparameter space and
//!   evaluates hyperprior densities.
//! * [`nested`], [`hmc`] and [`ml2`] are the three inference routes.
//! * [`predict`] turns a set of hyperparameter draws into a Gaussian-mixture
//!   predictive and scores it.
//!
//! Data-parallel loops (restarts, chains, mixture components, test points)
//! run on rayon when the `parallel` feature is enabled, and fall back to
//! plain iterators otherwise. See [`exec::Execution`].

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod exec;
pub mod gp;
pub mod hmc;
pub mod kernel;
pub mod ml2;
pub mod nested;
pub mod predict;
pub mod priors;
pub mod stats;

pub use dataset::{Dataset, FrequencyBounds, NormRecord};
pub use error::{Error, Result};
pub use exec::Execution;
pub use kernel::{SmHyperParams, SpectralComponent};

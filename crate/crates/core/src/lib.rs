//! Bayesian synthetic-likelihood inference for simulator-based models.
//!
//! The crate is organised bottom-up:
//!
//! * [`stats`] holds the dense Gaussian kernel: moment estimation, covariance
//!   repair and shrinkage, the plug-in and unbiased Gaussian log-densities and
//!   Gaussian conditioning.
//! * [`proposals`] provides the random-walk, adaptive (Haario) and guided
//!   independence proposals.
//! * [`engine`] is the Metropolis–Hastings core: priors, blocked auxiliary
//!   variates for correlated likelihoods, the synthetic-likelihood estimator and
//!   the three-stage chain driver.
//! * [`simulators`] and [`summaries`] implement the benchmark models and their
//!   summary statistics.

pub mod engine;
pub mod error;
pub mod proposals;
pub mod simulators;
pub mod stats;
pub mod summaries;

pub use error::{Error, Result};

/// A point in parameter space, on whichever scale the caller documents.
pub type ParamVector = nalgebra::DVector<f64>;

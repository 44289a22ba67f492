//! Bayesian inference over the weights and biases of fully-connected neural
//! networks by adaptive importance sampling.
//!
//! The library implements the PMCnet sampler: a population Monte Carlo scheme
//! whose Gaussian proposals are adapted per iteration with a scaled Langevin
//! step on the mean and a robust convex-combination update of the covariance.
//! A light variant keeps diagonal scales and adapts means with one epoch of
//! mini-batch gradient steps, trading a little statistical efficiency for a
//! much smaller memory and compute footprint.
//!
//! The crate is organised around four modules:
//!
//! - [`model`]: the feedforward network, its likelihoods, the Gaussian prior,
//!   the unnormalized log-target and its gradient, and an Adam optimizer used
//!   to produce the point estimate that initializes the sampler.
//! - [`ais`]: the sampler itself — proposal populations, deterministic-mixture
//!   importance weighting, local resampling, mean/covariance adaptation, and
//!   the binary trace format.
//! - [`posterior`]: the particle approximation of the posterior, predictive
//!   sampling on held-out data, and classification/regression metrics with
//!   credible-interval envelopes.
//! - [`data`]: dataset ingestion (LIBSVM, CSV), deterministic splitting,
//!   feature standardization, and the synthetic control-dataset generator.

pub mod ais;
pub mod data;
pub mod error;
pub mod math;
pub mod model;
pub mod posterior;
pub mod rng;

pub use error::{Error, Result};
pub use model::{
    HiddenActivation, Likelihood, NetworkSpec, ParameterLayout, ParameterVector, TargetEvaluation,
};

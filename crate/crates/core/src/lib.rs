//! Numerical laboratory for PCA in the high-dimension, low-sample-size regime.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectra`]: covariance-model families, sphericity `ε_k` and the
//!   ε-condition classifier.
//! - [`sampler`]: seeded sphered data `Z` and `X = Λ^{1/2} Z` in the
//!   population eigenbasis.
//! - [`dualpca`]: the `n × n` dual covariance, its eigendecomposition,
//!   primal direction recovery and angles to population eigenvectors.
//! - [`asymptotics`]: per-direction predictions (consistent, subspace-consistent,
//!   strongly inconsistent) and limiting eigenvalue laws for spiked models.
//! - [`harness`]: Monte Carlo experiments over a dimension grid and the checks
//!   that compare them with the predictions.

pub mod asymptotics;
pub mod dualpca;
pub mod error;
pub mod harness;
pub mod sampler;
pub mod spectra;

pub use error::{Error, Result};

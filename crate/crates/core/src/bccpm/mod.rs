// SPDX-License-Identifier: MIT OR Apache-2.0

//! Bayesian connectivity change-point model.
//!
//! A series is cut into blocks by a binary mask; each block is an independent
//! Gaussian segment whose mean and covariance are integrated out under a
//! Normal–Inverse-Wishart prior. Masks are scored by the product of block
//! evidences and sampled with a single-site Gibbs chain.

mod mask;
mod niw;
mod sampler;

pub use mask::{extract_segments, ChangePointMask};
pub use niw::{ln_multivariate_gamma, log_marginal_likelihood, log_posterior, NiwPrior, DEFAULT_KAPPA0};
pub use sampler::{sample_posterior, McmcConfig, PosteriorSummary};

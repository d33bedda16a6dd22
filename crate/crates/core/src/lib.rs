// SPDX-License-Identifier: MIT OR Apache-2.0

//! Change-point segmentation, local binary encoding and kernel hierarchical
//! extreme learning machines for classifying multivariate ROI time series.
//!
//! The stages compose as: [`bccpm`] finds a change-point mask per subject,
//! [`lbem`] turns each segment into 64-bin code histograms, and [`elm`] trains
//! a stacked sparse-autoencoder + kernel ELM classifier evaluated by [`eval`].

pub mod bccpm;
pub mod elm;
pub mod error;
pub mod eval;
pub mod lbem;
pub mod pipeline;
pub mod rng;
pub mod timeseries;

pub use error::{Error, Result};

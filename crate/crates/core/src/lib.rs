//! Inference for the average treatment effect at the cutoff of a sharp
//! regression discontinuity design.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernel`], [`linalg`], [`quadrature`] and [`normal`] are small numeric
//!   building blocks.
//! - [`localpoly`] holds the one-sided local quadratic fit, its weighted
//!   design moments and the plug-in sandwich variance.
//! - [`cct`] builds the bias-corrected studentized test on top of it, plus a
//!   conventional local linear baseline.
//! - [`dgp`] describes parametric data-generating processes, certifies the
//!   smoothness/boundedness conditions, and implements distribution splicing
//!   with its total-variation distance.
//! - [`montecarlo`] runs replication studies (size, power, adversarial
//!   splicing, estimator diagnostics). Replications run on rayon when the
//!   `parallel` feature is enabled and sequentially otherwise; results are
//!   bit-identical either way.

pub mod cct;
pub mod dgp;
mod error;
pub mod kernel;
pub mod linalg;
pub mod localpoly;
pub mod montecarlo;
pub mod normal;
pub mod quadrature;
pub mod rng;
mod sample;

pub use error::{Error, Result};
pub use sample::{Observation, Sample, Side};

//! Adaptive random search with objective-function estimation.
//!
//! The crate implements Hesitant Adaptive Search (HAS), its estimation
//! variant HAS-E, Quantile Adaptive Search with Estimation (QAS-E) and the
//! constant-bettering reference processes HAS1/HAS2, together with
//! calculators for their finite-time bounds and Monte Carlo checks of those
//! bounds on benchmarks with closed-form level-set geometry.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod bounds;
mod error;
pub mod estimation;
pub mod geometry;
pub mod normal;
pub mod population;
pub mod problem;
pub mod quadrature;
pub mod rng;
pub mod samplers;
pub mod verification;

pub use error::{Error, Result};
pub use rng::RandomStream;

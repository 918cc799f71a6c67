//! Spatial HAC (Conley) standard errors with a data-driven bandwidth.
//!
//! The bandwidth is the first distance at which the empirical covariogram of
//! the regression residuals crosses zero. Around the estimator sit the pieces
//! needed to check its size control: Gaussian random field simulation, a
//! seeded Monte Carlo engine, and Moran's I diagnostics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covariogram;
pub mod data;
pub mod error;
pub mod geo;
pub mod kernels;
pub mod mc;
pub mod moran;
pub mod randfield;
pub mod regress;
pub mod shac;

pub use error::{Error, Result};

//! Optimal quadratic quantization laboratory.
//!
//! Computes optimal quadratic quantizers (k-means centers) of probability
//! measures, evaluates distortion gradients and Hessians exactly where closed
//! forms exist, computes Wasserstein distances, and empirically verifies
//! Wasserstein-rate performance bounds for quantizers fitted on samples.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod hessian;
pub mod measures;
pub mod plane;
pub mod quad;
pub mod quantizer;
pub mod solvers;
pub mod special;
pub mod stream;
pub mod wasserstein;

pub use error::{Error, Result};

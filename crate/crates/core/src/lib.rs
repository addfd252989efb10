//! Core of the radar out-of-distribution detection workbench.
//!
//! Everything in this crate is pure computation over `alloc` containers:
//! complex linear algebra for small Hermitian matrices, correlated
//! Gaussian / compound-Gaussian clutter simulation, covariance estimators
//! (SCM and Tyler's fixed point), the classical matched-filter family of
//! detectors, a from-scratch 1D convolutional VAE with exact reverse-mode
//! gradients and Adam, and PFA-targeted threshold calibration.
//!
//! File formats, the worker pool and the command line live in the `radar-ood`
//! companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod calibration;
pub mod detectors;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod rng;
pub mod scenario;
pub mod trial;
pub mod vae;

pub use error::{Error, Result};
pub use linalg::{C64, Cholesky, ComplexVec, HermitianMat};

//! Multiparameter persistence landscapes from noisy point clouds.
//!
//! The pipeline is:
//!
//! 1. [`pointcloud`]: sample spheres, tori and Klein bottles, add noise,
//!    estimate density with a Gaussian KDE.
//! 2. [`bifiltration`]: build the Rips x codensity bifiltration and
//!    normalize it into the box `[0, T]^2`.
//! 3. [`persistence`]: slice the bifiltration along lines and compute
//!    single-parameter barcodes over F2.
//! 4. [`landscape`]: evaluate the multiparameter landscape on a grid from
//!    diagonal slices, plus the rank invariant.
//! 5. [`bands`]: standard and multiplier bootstrap confidence bands for the
//!    mean landscape.
//! 6. [`classify`]: maximum band depth classification with stratified
//!    cross-validation.
//!
//! The [`cli`] module wires these stages to files.

pub mod bands;
pub mod bifiltration;
pub mod classify;
pub mod cli;
pub mod error;
pub mod landscape;
pub mod persistence;
pub mod pointcloud;
pub mod rng;

pub use error::{Error, Result};

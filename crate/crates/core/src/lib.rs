//! Paired LQ/HQ RGB-D dataset construction for depth denoising.
//!
//! Raw tuples are aligned with an extrinsic estimated from 3-D
//! correspondences, masked to the objects on a support surface, expanded by
//! rigid-motion augmentation and split by capture. Classical denoisers and
//! masked depth metrics operate on the same frames.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augmentation;
pub mod baselines;
pub mod calibration;
pub mod dataset;
mod error;
pub mod geometry;
pub mod masking;
pub mod metrics;
pub mod spatial;
pub mod synthetic;

pub use error::{Error, Result};

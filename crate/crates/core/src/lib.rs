//! Volumetric image registration on regularized directional
//! representations.
//!
//! Images are replaced by vector-valued structural representations before
//! they are compared: vector field convolution (VFC) edge fields, or
//! normalized gradient fields (NGF) as the baseline. Any scalar metric is
//! then averaged over the field components. The crate also carries the
//! multi-stage registration engine that drives those metrics and the
//! evaluation harness (landmark error, label overlap, translation basins).

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod metrics;
mod fft;
pub mod io;
pub mod par;
pub mod registration;
pub mod repr;
pub mod transform;
pub mod volume;

pub use error::{Error, Result};

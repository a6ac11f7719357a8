//! Deterministic link-level simulator for position-aided mmWave
//! vehicle-to-infrastructure beam alignment.
//!
//! A roadside unit and a communicating vehicle each carry an N×N uniform
//! planar array whose training beams are Kronecker products of N-point DFT
//! vectors. The roadside unit holds a long-term angular prior per 5 m road
//! cell, built from the vehicle-free environment, and maps the reported
//! vehicle position to a short list of predetermined beam pairs. The Monte
//! Carlo harness compares that restricted sweep against exhaustive search
//! over the region of interest on a first-order geometric ray channel
//! (line of sight plus single ground/facade bounces with box occlusion)
//! and aggregates training-count and power-loss statistics as CDFs.

pub mod align;
pub mod array;
pub mod channel;
pub mod error;
pub mod experiment;
mod geo;
pub mod metrics;
pub mod prior;
pub mod scene;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Finite and strictly positive; NaN and infinities fail validation.
pub(crate) fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

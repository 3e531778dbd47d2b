//! Data-driven configuration of a wave-controlled reconfigurable intelligent
//! surface.
//!
//! The crate is organised along the pipeline:
//!
//! * [`physics`] is the exact simulator used as ground truth.
//! * [`dataset`] draws random standing-wave amplitude sets and records the
//!   sampled radiation patterns they produce.
//! * [`nn`] is a dense network trained on that data to act as a surrogate.
//! * [`ga`] evolves the network architecture.
//! * [`optimize`] runs simulated annealing against either backend and keeps a
//!   lookup table of solved beam/null objectives for warm starts.

// Range checks are written as `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifact;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod ga;
pub mod nn;
pub mod optimize;
pub mod physics;
pub mod plot;

pub use error::{Error, Result};

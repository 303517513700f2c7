//! Beam-wander memory models for free-space optical links.

pub mod arma;
pub mod channel;
pub mod commands;
pub mod error;
pub mod ingest;
pub mod rng;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};

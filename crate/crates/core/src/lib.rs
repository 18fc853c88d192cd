//! Deterministic workbench for studying link-flooding attacks on tree
//! networks: topology construction, fluid-flow simulation, bot coordination,
//! and two detection fronts (link-correlation and supervised classifiers).
//!
//! Everything is seeded; the same configuration and seed list reproduce
//! byte-identical outputs, with or without the `parallel` feature.

pub mod error;
pub mod rng;

mod par;

pub mod topology;
pub mod attack;
pub mod corr;
pub mod engine;
pub mod ml;
pub mod traffic;

pub use error::{Error, Result};

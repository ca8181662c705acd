//! Periodic-Stokes immersed-boundary engine for slender elastic fibers.

pub mod banded;
pub mod cli;
pub mod config;
pub mod drag;
pub mod error;
pub mod experiments;
pub mod fiber;
pub mod grid;
pub mod interaction;
pub mod output;
pub mod rng;
pub mod spectral;
pub mod stepper;

pub use error::{Error, Result};

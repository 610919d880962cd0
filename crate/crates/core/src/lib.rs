//! Topological complexity of neural-network feature spaces.
//!
//! Betti numbers of point clouds via Vietoris–Rips persistence, a small
//! deterministic neural-network stack with a stacked-sine activation, and
//! Betti-guided pruning of convolutional filters.

pub mod cli;
pub mod error;
pub mod pointcloud;
pub mod pruning;
pub mod rng;
pub mod topology;

pub use error::{Error, Result};
pub mod datasets;
pub mod experiments;
pub mod nn;
pub mod tensor;

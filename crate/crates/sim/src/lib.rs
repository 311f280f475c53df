//! Topologies, payload delivery simulation and experiment orchestration.

pub mod delivery;
pub mod error;
pub mod experiment;
pub mod topology;

pub use error::SimError;
pub use experiment::{ExperimentConfig, Method, RunMetrics, TopologySource};

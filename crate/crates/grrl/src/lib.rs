//! Graph neural network routing policy and its REINFORCE trainer.

pub mod checkpoint;
pub mod episode;
pub mod error;
pub mod features;
pub mod gnn;
pub mod params;
pub mod train;

pub use error::GrrlError;
pub use episode::{ActionRule, Episode, StepRecord};
pub use gnn::{GraphContext, PolicyOutput};
pub use params::PolicyParams;
pub use train::{MetricsRecord, TrainConfig};

use diamond_core::NetError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GrrlError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("invalid policy shape: {0}")]
    InvalidShape(String),
    #[error("invalid hyperparameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite gradient at update {update} (return {ret}, baseline {baseline})")]
    NonFiniteGradient { update: usize, ret: f64, baseline: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("metrics: {0}")]
    Csv(#[from] csv::Error),
}

use diamond_core::NetError;
use diamond_grrl::GrrlError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Policy(#[from] GrrlError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("unknown preset {0:?} (expected nsfnet or geant2)")]
    UnknownPreset(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

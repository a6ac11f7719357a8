//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid angle: {0}")]
    InvalidAngle(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sector covers no beams")]
    EmptySectorCoverage,

    #[error("no eligible communicating vehicle in snapshot")]
    NoEligibleVehicle,

    #[error("infeasible traffic configuration: {0}")]
    InfeasibleTraffic(String),

    #[error("reflection order {0} not supported (max 1)")]
    UnsupportedOrder(u32),

    #[error("cell {0} has an empty prior")]
    EmptyPrior(usize),

    #[error("candidate pair set is empty")]
    EmptyCandidates,

    #[error("beam subset is empty")]
    EmptySubset,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("prior database: {0}")]
    PriorDatabase(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

use crate::lattice::Vertex;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SandpileError {
    #[error("vertex ({row}, {col}) lies outside the {side}x{side} box")]
    OutOfBox { row: usize, col: usize, side: usize },

    #[error("configuration is not stable")]
    Unstable,

    #[error("configuration has a vertex holding more than 3 grains")]
    Overloaded,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("vertex {0} is not critical")]
    NotCritical(Vertex),

    #[error("vertex set is empty")]
    EmptySet,

    #[error("vertex set is not connected")]
    NotConnected,

    #[error("vertex set is not a maximal generator")]
    NotMaximal,

    #[error("target {0} is not part of the generator")]
    TargetOutsideGenerator(Vertex),

    #[error("baseline expected avalanche size is zero")]
    ZeroBaseline,

    #[error("invalid square: {0}")]
    InvalidSquare(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = SandpileError> = std::result::Result<T, E>;

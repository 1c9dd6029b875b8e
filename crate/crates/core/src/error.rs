use thiserror::Error;

use crate::circuit::GateError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bias {0} outside [0, 1]")]
    InvalidBias(f64),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("target bias {target} is not reachable from {start} within {max_rounds} rounds")]
    UnreachableTarget {
        start: f64,
        target: f64,
        max_rounds: usize,
    },
    #[error("arithmetic overflow computing {0}")]
    Overflow(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("compile error: {0}")]
    Compile(String),
    #[error("geometry mismatch: {0}")]
    Geometry(String),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error("schedule parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

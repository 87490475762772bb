use thiserror::Error;

/// Errors raised by the library. Numerical routines never fail on valid
/// input; everything here is a construction or usage problem.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value {value} is outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("invalid signal distribution: {0}")]
    InvalidSignal(String),

    #[error("invalid evidence matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid information structure: {0}")]
    InvalidStructure(String),

    #[error("evidence matrix is not injective (sigma_min = {sigma_min:e})")]
    NotInjective { sigma_min: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid aggregator configuration: {0}")]
    Config(String),

    #[error("aggregator usage error: {0}")]
    Usage(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {msg}")]
    Io { path: String, msg: String },

    #[error("gave up after {attempts} attempts: {reason}")]
    GaveUp { attempts: usize, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

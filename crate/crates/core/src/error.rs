use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by grid construction, solving, post-processing and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("point {point:?} lies outside the grid on axis {axis} (allowed [{lo}, {hi}])")]
    OutOfDomain {
        axis: usize,
        point: Vec<f64>,
        lo: f64,
        hi: f64,
    },

    #[error("time {t} outside stored range [{first}, {last}]")]
    TimeOutOfRange { t: f64, first: f64, last: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grids do not match")]
    GridMismatch,

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("dynamics singular: {0}")]
    Singular(String),

    #[error("time step {dt} violates the CFL limit {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("non-finite value {value} at node {node} (coordinates {point:?}) at t = {t}")]
    NonFinite {
        node: usize,
        point: Vec<f64>,
        value: f64,
        t: f64,
    },

    #[error("{path}:{line}: {message}")]
    Scenario {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line frontend.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Cfl { .. } | Error::NonFinite { .. } | Error::Singular(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by model construction, simulation and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A run description violates a model invariant (T ≤ M, γ ∈ [0,1], ...).
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A topology cannot be built for the requested size and coordination number.
    #[error("invalid topology spec: {0}")]
    InvalidSpec(String),

    /// Malformed metric input, e.g. fewer than four items for a quartile split.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Least squares requested with a constant regressor.
    #[error("degenerate regressor: all {0} quality values are identical")]
    DegenerateRegressor(usize),

    /// An agent has consumed every item. Unreachable for valid configs.
    #[error("agent {agent} has no unconsumed item left at step {step}")]
    ExhaustedMarket { agent: usize, step: usize },

    /// A replicated run failed; carries the replication index.
    #[error("run {run_index}: {source}")]
    Run {
        run_index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the user's run description rather than the environment.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::InvalidConfig(_)
            | Error::InvalidSpec(_)
            | Error::InvalidInput(_)
            | Error::Parse { .. } => true,
            Error::Run { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

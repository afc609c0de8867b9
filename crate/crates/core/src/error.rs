use std::path::PathBuf;

/// Errors raised by parsers, solvers and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}: no records found")]
    EmptyInput(PathBuf),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("charge {charge} lies within {distance:.3e} Å of panel {panel}")]
    NearSingularity {
        charge: usize,
        panel: usize,
        distance: f64,
    },
    #[error("iterative solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("configuration (seed {seed}, index {index}): {source}")]
    Experiment {
        seed: u64,
        index: usize,
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// The innermost error, looking through experiment context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Experiment { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the solver and its support modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("grid mismatch between fields")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite argument {value} passed to {what}")]
    Domain { what: &'static str, value: f64 },

    #[error(
        "resolvent did not converge at s = {s} after {iterations} iterations (|g| = {residual:e})"
    )]
    Resolvent {
        s: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("nonlinear solve did not converge at t = {t} (residual {residual:e} after {iterations} iterations)")]
    NonlinearSolve {
        t: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid scheme parameter {field}: {message}")]
    Scheme {
        field: &'static str,
        message: String,
    },

    #[error("configuration error:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("failed to parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Solver failures (as opposed to bad input) map to exit code 2 in the CLI.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::Resolvent { .. } | Error::NonlinearSolve { .. } | Error::Domain { .. }
        )
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised anywhere in the laboratory.
///
/// Variants map onto the CLI exit codes: contract and validation problems
/// are usage errors, numeric failures are numeric errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input data violates a type invariant. `path` locates the field.
    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },

    /// A precondition of an operation does not hold.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Operator domain problem (negative support where positivity is required, poles).
    #[error("domain error: {0}")]
    Domain(String),

    /// Analytic continuation requested where it does not exist.
    #[error("analytic continuation into eta = {eta} requires a spectrum bounded below")]
    AnalyticContinuation { eta: f64 },

    /// Numerical procedure failed to reach its target accuracy.
    #[error("numeric error: {message} (achieved tolerance {achieved:.3e})")]
    Numeric { message: String, achieved: f64 },

    /// The input is degenerate (all zeros, vanishing center value).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A discretized model cannot honestly cover the requested horizon.
    #[error("truncation error: {0}")]
    Truncation(String),

    /// Problem size exceeds the configured memory bound.
    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("i/o error: {0}")]
    Io(String),

    /// Failure inside a named pipeline stage.
    #[error("stage `{stage}` failed: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn contract(message: impl Into<String>) -> Self {
        Error::Contract(message.into())
    }

    /// True for failures of numerical procedures as opposed to bad inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self.root(),
            Error::Numeric { .. } | Error::Truncation(_) | Error::Capacity(_)
        )
    }
}

impl Error {
    /// The innermost error, beneath any stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

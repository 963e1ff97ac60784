use thiserror::Error;

/// Errors raised by models, filters and the twin-experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("layout mismatch: expected {expected}, got {got}")]
    LayoutMismatch { expected: String, got: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {what} ({diagnostics})")]
    Numerical { what: String, diagnostics: String },

    #[error("filter failure at step {step}: {source}")]
    FilterStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn numerical(what: impl Into<String>, diagnostics: impl Into<String>) -> Self {
        Error::Numerical {
            what: what.into(),
            diagnostics: diagnostics.into(),
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn at_step(self, step: usize) -> Self {
        match self {
            e @ Error::FilterStep { .. } => e,
            e => Error::FilterStep {
                step,
                source: Box::new(e),
            },
        }
    }

    /// True for errors caused by invalid input or configuration rather than numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_)
            | Error::LayoutMismatch { .. }
            | Error::Dimension { .. }
            | Error::Domain(_)
            | Error::Parse { .. } => true,
            Error::FilterStep { source, .. } => source.is_config(),
            _ => false,
        }
    }

    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Usage(_))
    }
}

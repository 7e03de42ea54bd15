use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A document key is missing, unknown, or has the wrong type.
    #[error("validation error at `{key}`: {message}")]
    Validation { key: String, message: String },

    /// A value parsed fine but violates a model invariant.
    #[error("range error at `{key}`: {message}")]
    Range { key: String, message: String },

    /// A field array went non-finite.
    #[error("integration diverged at t = {time}")]
    Diverged { time: f64 },

    /// An operation was asked to evaluate outside its domain of validity.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn range(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Range {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Errors caused by the configuration rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self.root(),
            Error::Validation { .. } | Error::Range { .. } | Error::Json(_) | Error::Unsupported(_)
        )
    }

    pub fn is_divergence(&self) -> bool {
        matches!(self.root(), Error::Diverged { .. })
    }
}

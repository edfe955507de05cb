use std::path::PathBuf;

/// Errors raised anywhere in the training pipeline.
///
/// Every variant carries the name of the module that raised it so that the
/// command line can print a single-line diagnostic of the form
/// `<module>: <cause>`.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{module}: configuration error: {msg}")]
    Config { module: &'static str, msg: String },

    #[error("{module}: index error: {msg}")]
    Index { module: &'static str, msg: String },

    #[error("{module}: numeric error: {msg}")]
    Numeric { module: &'static str, msg: String },

    #[error("{module}: degenerate input: {msg}")]
    Degenerate { module: &'static str, msg: String },

    #[error("data: ingestion error in {path}: {msg}")]
    Ingestion { path: String, msg: String },

    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("io: {path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn config(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Config { module, msg: msg.into() }
    }

    pub(crate) fn index(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Index { module, msg: msg.into() }
    }

    pub(crate) fn numeric(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Numeric { module, msg: msg.into() }
    }

    pub(crate) fn degenerate(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Degenerate { module, msg: msg.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format { path: path.into(), msg: msg.into() }
    }

    /// Name of the module the error originated in.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Config { module, .. }
            | Error::Index { module, .. }
            | Error::Numeric { module, .. }
            | Error::Degenerate { module, .. } => module,
            Error::Ingestion { .. } => "data",
            Error::Io { .. } | Error::Format { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

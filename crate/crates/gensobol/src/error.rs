use std::path::PathBuf;

use gensobol_core::Error as CoreError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("cannot parse config {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },
    #[error("missing upstream artifact {path}: {hint}")]
    MissingArtifact { path: PathBuf, hint: String },
    #[error("artifact {path} is malformed: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    /// Process exit code: 2 config, 3 model failure, 4 zero variance, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::ConfigParse { .. } | Error::MissingArtifact { .. } => 2,
            Error::Core(e) if e.is_model_failure() => 3,
            Error::Core(CoreError::Degenerate(_)) => 4,
            Error::Core(CoreError::InvalidArgument(_)) => 2,
            _ => 1,
        }
    }
}

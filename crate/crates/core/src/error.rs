use thiserror::Error;

/// Broad failure class. The numeric values double as CLI exit codes and
/// FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCategory {
    Usage = 2,
    Dimension = 3,
    Degenerate = 4,
    Overflow = 5,
    Internal = 6,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        self as i32
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Usage => "usage",
            ErrorCategory::Dimension => "dimension",
            ErrorCategory::Degenerate => "degenerate",
            ErrorCategory::Overflow => "overflow",
            ErrorCategory::Internal => "internal",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid FST: {0}")]
    InvalidFst(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("FST contains a cycle")]
    Cyclic,

    #[error("path count exceeds the bound of {0}")]
    PathOverflow(usize),

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unsupported composition: {0}")]
    UnsupportedComposition(String),

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite gradient: {0}")]
    NonFinite(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Attach a file name to an error raised while reading that file.
    pub fn in_file(self, path: impl Into<String>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Parse { .. }
            | Error::InvalidFst(_)
            | Error::InvalidArgument(_)
            | Error::Io(_) => ErrorCategory::Usage,
            Error::InvalidPath(_) | Error::Dimension(_) => ErrorCategory::Dimension,
            Error::Degenerate(_) | Error::NonFinite(_) => ErrorCategory::Degenerate,
            Error::PathOverflow(_) => ErrorCategory::Overflow,
            Error::Cyclic | Error::UnsupportedComposition(_) | Error::UnsupportedTopology(_) => {
                ErrorCategory::Usage
            }
            Error::Internal(_) => ErrorCategory::Internal,
            Error::File { source, .. } => source.category(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

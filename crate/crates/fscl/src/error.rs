use std::path::PathBuf;

/// Process exit statuses, one per failure class.
pub mod exit {
    pub const OK: i32 = 0;
    /// Everything ran but at least one enabled verdict failed.
    pub const VERDICT_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    /// Missing input or a filesystem failure.
    pub const IO: i32 = 3;
    /// The solver produced non-finite values.
    pub const DIVERGENCE: i32 = 4;
    /// A diagnostic could not be evaluated on the given data.
    pub const DIAGNOSTIC: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration has {} problem(s):\n  {}", .0.len(), .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{}: not found", .0.display())]
    NotFound(PathBuf),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: malformed file: {reason}", path.display())]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Core(#[from] fscl_core::Error),

    #[error("thread pool: {0}")]
    Threads(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Self::NotFound(path)
        } else {
            Self::Io { path, source }
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Self::Format { path: path.into(), reason: reason.into() }
    }

    pub fn exit_code(&self) -> i32 {
        use fscl_core::Error as E;
        match self {
            Self::Config(_) => exit::CONFIG,
            Self::NotFound(_) | Self::Io { .. } | Self::Format { .. } | Self::Threads(_) => exit::IO,
            Self::Core(e) => match e {
                E::InvalidConfiguration(_) | E::UnsupportedGrid(_) | E::InvalidPairing(_) => exit::CONFIG,
                E::Divergence { .. } => exit::DIVERGENCE,
                E::InvalidArgument(_) | E::ShapeMismatch(_) | E::BracketViolation { .. } | E::UnusableTrajectory(_) => {
                    exit::DIAGNOSTIC
                }
            },
        }
    }
}

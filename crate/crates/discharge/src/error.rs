use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("simulation failed: {0}")]
    Simulation(discharge_core::Error),
    #[error(transparent)]
    Core(#[from] discharge_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit status: 2 usage, 3 simulation, 4 I/O, 5 divergence.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Usage(_) => 2,
            Error::Simulation(_) => 3,
            Error::Core(discharge_core::Error::Diverged { .. }) => 5,
            Error::Core(
                discharge_core::Error::InvalidArgument { .. }
                | discharge_core::Error::EmptySplit(_)
                | discharge_core::Error::UnknownFeatureGroup(_)
                | discharge_core::Error::FeatureGroupAbsent(_)
                | discharge_core::Error::DimensionMismatch { .. },
            ) => 2,
            Error::Core(_) => 3,
            Error::Io { .. } | Error::Csv { .. } | Error::Json { .. } | Error::Format { .. } => 4,
        }
    }
}

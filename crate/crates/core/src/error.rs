use alloc::string::String;

use crate::dataset::Split;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },
    #[error("prediction and truth lengths differ ({predictions} vs {truths})")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("cannot compute metrics over an empty sample")]
    Empty,
    #[error("MAPE undefined: truth at index {index} is {value}")]
    MapeUndefined { index: usize, value: f64 },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },
    #[error("feature dimension mismatch: model expects {expected} inputs, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown feature group `{0}`")]
    UnknownFeatureGroup(String),
    #[error("feature group `{0}` is not part of the feature set")]
    FeatureGroupAbsent(&'static str),
    #[error("corpus has no {0} records")]
    EmptySplit(Split),
    #[error("record {trip_id} is outside every stratum")]
    Unstratified { trip_id: usize },
    #[error("{failed} of {total} trips failed to simulate (limit 1%)")]
    CorpusFailed { failed: usize, total: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { name, reason: reason.into() }
    }
}

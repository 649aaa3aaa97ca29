use thiserror::Error;

use crate::audio::AudioError;
use crate::corpus::CorpusError;
use crate::features::FeatureError;
use crate::learners::LearnError;
use crate::metrics::MetricError;
use crate::partition::PartitionError;
use crate::runner::RunError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-level error, one variant per module.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Run(#[from] RunError),
}

impl Error {
    /// Stable, machine-readable error kind (the variant name of the inner error).
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Audio(e) => e.kind(),
            Error::Feature(e) => e.kind(),
            Error::Corpus(e) => e.kind(),
            Error::Partition(e) => e.kind(),
            Error::Learn(e) => e.kind(),
            Error::Metric(e) => e.kind(),
            Error::Run(e) => e.kind(),
        }
    }
}

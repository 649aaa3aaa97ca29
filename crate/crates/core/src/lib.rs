//! Cross-corpus speech emotion recognition evaluation.
//!
//! The crate covers the whole path from WAV files to UAR tables:
//!
//! * [`audio`]: WAV I/O and the standard preprocessing chain (mono downmix,
//!   edge-silence trim, 16 kHz resampling, peak normalization).
//! * [`features`]: frame-level low-level descriptors (pitch, energy, jitter,
//!   shimmer, HNR, spectral balance, MFCC) summarized by statistical
//!   functionals into a compact 88-dimension or a brute-force vector.
//! * [`corpus`]: manifests, binary valence mapping and majority-vote labels.
//! * [`partition`]: speaker-grouped stratified folds, self-corpus and
//!   3-to-1 cross-corpus splits.
//! * [`learners`]: standardization, logistic regression, a one-hidden-layer
//!   MLP and hyperparameter search.
//! * [`metrics`]: confusion matrices, UAR and Fleiss' kappa.
//! * [`runner`]: feature caching, experiments, synthetic corpora and reports.

pub mod audio;
pub mod corpus;
pub mod error;
pub mod features;
pub mod learners;
pub mod metrics;
pub mod partition;
pub mod runner;
pub mod seed;

pub use audio::{AudioClip, PreprocessConfig};
pub use corpus::{Emotion, Manifest, UtteranceRecord, Valence};
pub use error::{Error, Result};
pub use features::{FeatureDescriptor, FeatureVector, LldMatrix, Preset};
pub use metrics::ConfusionMatrix;
pub use partition::{FoldAssignment, TrainTestSplit};
pub use runner::{EvalReport, ExperimentConfig, SynthSpec};

//! Video-level metrics and the train-test and cross-prompt protocols.
//!
//! Fake is the positive class everywhere. Per-generator accuracy is measured
//! on that generator's fake test videos only; recall, F1 and AP add the real
//! test videos.

mod metrics;
mod protocol;
mod report;

use thiserror::Error;

pub use metrics::{accuracy, average_precision, Confusion, Prediction, PredictionSet};
pub use protocol::{
    run_cross_prompt_protocol, run_train_test_protocol, video_residual, Detector, DirectorySource, FittedDetector,
    ResidualBaseline, ResidualCut, SpannDetector, TrainScope, VideoScorer, VideoSource,
};
pub use report::{CrossPromptReport, GeneratorAccuracy, ProtocolReport, CROSS_PROMPT_ID, TRAIN_TEST_ID};

use crate::detector::DetectorError;
use crate::io::{FormatError, ManifestError, PromptModality, Split};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no predictions to evaluate")]
    Empty,
    #[error("no fake (positive) videos among the predictions")]
    NoPositives,
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score {score} of `{id}` is outside [0, 1]")]
    ScoreRange { id: String, score: f64 },
    #[error("duplicate prediction id `{0}`")]
    DuplicateId(String),
    #[error("manifest has no real videos in the {0} split")]
    MissingReal(&'static str),
    #[error("protocol needs at least 2 fake generators, manifest has {0}")]
    TooFewGenerators(usize),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator `{0}` has no fake test videos")]
    EmptyTestSet(String),
    #[error("no fake {modality} videos in the {split} split")]
    MissingModality { modality: PromptModality, split: Split },
    #[error("video `{0}` not found")]
    MissingVideo(String),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
}

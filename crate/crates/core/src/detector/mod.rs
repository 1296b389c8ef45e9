//! Memory-augmented temporal detector.
//!
//! For each consecutive pair `t` the detector encodes frame `t` together with
//! its geometry channels, reads a key/value memory of earlier frames, decodes,
//! and scores. The frame scores are averaged into a video score.
//!
//! ```text
//! f_e       = Enc(I_t, X11, C11, R)
//! f_c       = softmax((f_e W_q) K^T / sqrt(D)) V      // occupied slots only
//! f_d       = Dec([f_e | f_c])
//! s_t       = sigmoid(clip(Scorer(mean(f_d))))
//! (k, v)    = (mean(f_e) W_k, mean(f_d) (1 - |2 s_t - 1|))  // written after the read
//! ```

mod blocks;
mod checkpoint;
mod features;
mod memory;
mod model;
mod params;
mod train;

use thiserror::Error;

pub use blocks::softmax_rows;
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use features::{pair_inputs, pair_residual, PairInputs};
pub use memory::{attend, write_scale, MemoryRead, MemoryState};
pub use model::{
    accumulate_gradient, bce, decode, detect_entry, detect_video, encode_pair, forward_scores, memory_read,
    memory_update, score, video_score, DecoderFeatures, EncoderFeatures, ScoreTrace, VideoInputs,
    DEFAULT_THRESHOLD, LOGIT_CLIP,
};
pub use params::{DetectorConfig, DetectorParams, INPUT_CHANNELS, PARAM_NAMES};
pub use train::{loss_and_gradient, mean_loss, train, Adam, TrainConfig, TrainOutcome, TrainingExample};

use crate::geometry::GeometryError;
use crate::io::FormatError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectorError {
    #[error("frame {height}x{width} is not divisible into {patch}x{patch} patches")]
    PatchSize { patch: usize, height: usize, width: usize },
    #[error("{what} is {rows}x{cols}, expected N x {dim}")]
    Shape { what: &'static str, rows: usize, cols: usize, dim: usize },
    #[error("missing pair record for t = {t}")]
    MissingPair { t: usize },
    #[error("video has no frame pairs")]
    EmptyVideo,
    #[error("frame score {0} outside (0, 1)")]
    ScoreRange(f64),
    #[error("threshold {0} is not finite")]
    Threshold(f64),
    #[error("training set needs both labels (real {n_real}, fake {n_fake})")]
    SingleClass { n_real: usize, n_fake: usize },
    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),
    #[error("training diverged to non-finite parameters")]
    Diverged,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

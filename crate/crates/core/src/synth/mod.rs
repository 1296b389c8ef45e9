//! Synthetic two-view and multi-frame sequences with exact point maps.
//!
//! Real sequences are ray cast from a textured height field along a smooth
//! orbit. Fake sequences re-render each frame with independent surface
//! jitter, intensity noise and brightness flicker while keeping the pair
//! records of the clean geometry, so every frame looks plausible on its own
//! but consecutive frames disagree with any single 3D structure.

mod corpus;
mod perturb;
mod pose;
mod scene;
mod sequence;

use thiserror::Error;

pub use corpus::{make_corpus, Corpus, CorpusConfig, FamilySpec, REAL_GENERATOR};
pub use perturb::PerturbationSpec;
pub use pose::{CameraPose, Mat3};
pub use scene::{
    render_deformed, render_view, Deformation, HeightField, ProceduralTexture, Render, Scene, Wave,
    MISS_DEPTH, STANDARD_DEPTH,
};
pub use sequence::{oracle_pointmaps, perturb, SyntheticSequence, Trajectory};

use crate::geometry::GeometryError;
use crate::io::{FormatError, ManifestError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("no camera ray hits the scene")]
    NothingVisible,
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("sequence needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("perturbation magnitudes must be finite and non-negative: {0:?}")]
    InvalidPerturbation(PerturbationSpec),
    #[error("corpus needs at least one real and one fake sequence (got {n_real}, {n_fake})")]
    EmptyClass { n_real: usize, n_fake: usize },
    #[error("corpus config lists no fake families")]
    NoFamilies,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
}

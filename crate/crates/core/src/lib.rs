//! Multi-view consistency forensics for generated video.
//!
//! The crate splits into five layers:
//!
//! - [`geometry`]: pinhole projection, z-buffered forward warping and
//!   reprojection residuals between two frames.
//! - [`synth`]: a ray-cast height-field world that produces frames with exact
//!   point maps, plus perturbations that break cross-view consistency.
//! - [`io`]: the pair-record container, frame rasters, manifests and splits.
//! - [`detector`]: an attention-memory temporal detector trained with
//!   hand-written gradients.
//! - [`eval`]: accuracy, recall, F1 and AP, and the train-test and
//!   cross-prompt protocols.

pub mod detector;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod synth;

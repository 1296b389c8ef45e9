//! Pinhole geometry, forward warping and reprojection residuals.
//!
//! Given a reference frame `I1`, a second frame `I2`, and the point map of
//! `I2`'s pixels expressed in the reference camera (`X21`), the residual
//! pipeline is
//!
//! ```text
//! P21 = project(K1, X21)        // per-pixel (u, v) in the reference view
//! I21 = splat(I2, P21)          // nearest-pixel z-buffered forward warp
//! R   = |I1 - I21|              // masked where nothing was splatted
//! ```

mod camera;
mod image;
mod residual;
mod warp;

pub use camera::{
    backproject, estimate_focal, project_points, CameraIntrinsics, Projection, MIN_DEPTH,
    MIN_FOCAL_SUPPORT,
};
pub use image::{ConfidenceMap, ImageFrame, PointMap, MIN_FRAME_SIDE};
pub use residual::{residual_map, residual_statistics, ResidualMap, ResidualStats};
pub use warp::{forward_warp, WarpResult};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("{what} has dims {found:?}, expected {expected:?}")]
    DimensionMismatch {
        what: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{what} has a non-finite or negative entry at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("depth {value} at index {index} is not positive")]
    NonPositiveDepth { index: usize, value: f64 },
    #[error("only {found} points in front of the camera, need {required}")]
    InsufficientPoints { found: usize, required: usize },
    #[error("focal estimate {0} is not positive")]
    NonPositiveFocal(f64),
    #[error("no overlap: the warp produced zero valid pixels")]
    NoOverlap,
}

/// Warps `source` into the reference view through `points` (the source pixels
/// expressed in the reference camera) and returns the residual against `reference`.
pub fn reprojection_residual(
    reference: &ImageFrame,
    source: &ImageFrame,
    points: &PointMap,
    intrinsics: &CameraIntrinsics,
) -> Result<ResidualMap, GeometryError> {
    if points.dims() != source.dims() {
        return Err(GeometryError::DimensionMismatch {
            what: "source point map",
            expected: source.dims(),
            found: points.dims(),
        });
    }
    let projected = project_points(points, intrinsics);
    let warp = forward_warp(source, &projected)?;
    residual_map(reference, &warp)
}

use ndarray::Array2;

use super::params::{DetectorConfig, INPUT_CHANNELS};
use super::DetectorError;
use crate::geometry::{
    estimate_focal, reprojection_residual, CameraIntrinsics, ConfidenceMap, GeometryError, ImageFrame, PointMap,
    ResidualMap,
};
use crate::io::PairRecord;

/// Flattened patch inputs for both frames of one pair, plus the residual they
/// were built from. Rows are patches in raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct PairInputs {
    pub current: Array2<f64>,
    pub previous: Array2<f64>,
    pub current_valid: Vec<bool>,
    pub previous_valid: Vec<bool>,
    pub residual: ResidualMap,
}

/// Residual of `(frame_t, frame_prev)` through the pair's geometry. Uses the
/// record's intrinsics when present and a focal estimate from `X11` otherwise.
/// A pair whose warp lands nowhere yields an all-invalid residual.
pub fn pair_residual(frame_t: &ImageFrame, frame_prev: &ImageFrame, pair: &PairRecord) -> Result<ResidualMap, DetectorError> {
    let (height, width) = frame_t.dims();
    let intrinsics = match pair.k1 {
        Some(k) => k,
        None => match estimate_focal(&pair.x11) {
            Ok(k) => k,
            Err(GeometryError::InsufficientPoints { .. } | GeometryError::NonPositiveFocal(_)) => {
                CameraIntrinsics::centered(width.max(height) as f64, height, width)?
            }
            Err(e) => return Err(e.into()),
        },
    };
    match reprojection_residual(frame_t, frame_prev, &pair.x21, &intrinsics) {
        Ok(r) => Ok(r),
        Err(GeometryError::NoOverlap) => Ok(ResidualMap {
            height,
            width,
            values: vec![0.0; height * width],
            validity: vec![false; height * width],
        }),
        Err(e) => Err(e.into()),
    }
}

/// Mean depth of the confident, in-front points of `X11`; 1 if there are none.
fn depth_scale(points: &PointMap, conf: &ConfidenceMap) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (p, c) in points.points().iter().zip(conf.values()) {
        if *c > 0.0 && p[2] > 0.0 {
            sum += p[2];
            n += 1;
        }
    }
    if n == 0 || sum <= 0.0 {
        1.0
    } else {
        sum / n as f64
    }
}

/// Builds the per-pixel input channels for both frames and cuts them into
/// `p x p` patches.
///
/// Frame `t` carries RGB, `X11 / s`, `C11 / (1 + C11)`, the residual times
/// `config.residual_gain` and the residual validity, where `s` is the mean
/// confident depth of `X11`. Frame `t - 1` carries RGB, `X21 / s` and
/// `C21 / (1 + C21)`; its residual channels are zero because the residual lives
/// on frame `t`'s pixel grid.
pub fn pair_inputs(
    frame_t: &ImageFrame,
    frame_prev: &ImageFrame,
    pair: &PairRecord,
    config: &DetectorConfig,
) -> Result<PairInputs, DetectorError> {
    let dims = frame_t.dims();
    for (what, found) in [("previous frame", frame_prev.dims()), ("pair record", pair.dims())] {
        if found != dims {
            return Err(GeometryError::DimensionMismatch { what, expected: dims, found }.into());
        }
    }
    let (height, width) = dims;
    let p = config.patch;
    if p == 0 || height % p != 0 || width % p != 0 {
        return Err(DetectorError::PatchSize { patch: p, height, width });
    }
    let residual = pair_residual(frame_t, frame_prev, pair)?;
    let scale = depth_scale(&pair.x11, &pair.c11);
    let gain = config.residual_gain;

    let current = pixel_channels(frame_t, &pair.x11, &pair.c11, scale, |i| {
        let ok = residual.validity[i];
        [residual.values[i] * gain, if ok { 1.0 } else { 0.0 }]
    });
    let previous = pixel_channels(frame_prev, &pair.x21, &pair.c21, scale, |_| [0.0, 0.0]);
    let (current, current_valid) = patchify(&current, pair.c11.values(), height, width, p);
    let (previous, previous_valid) = patchify(&previous, pair.c21.values(), height, width, p);
    Ok(PairInputs { current, previous, current_valid, previous_valid, residual })
}

fn pixel_channels(
    frame: &ImageFrame,
    points: &PointMap,
    conf: &ConfidenceMap,
    scale: f64,
    extra: impl Fn(usize) -> [f64; 2],
) -> Vec<f64> {
    let rgb = frame.data();
    let n = points.points().len();
    let mut out = Vec::with_capacity(n * INPUT_CHANNELS);
    for i in 0..n {
        let pt = points.points()[i];
        let c = conf.values()[i];
        out.extend_from_slice(&rgb[i * 3..i * 3 + 3]);
        out.extend(pt.iter().map(|v| v / scale));
        out.push(c / (1.0 + c));
        out.extend(extra(i));
    }
    out
}

/// Row `k` holds patch `k` (raster order), laid out pixel-major then channel.
/// A patch is valid when at least one of its pixels has positive confidence.
fn patchify(channels: &[f64], conf: &[f64], height: usize, width: usize, p: usize) -> (Array2<f64>, Vec<bool>) {
    let (rows, cols) = (height / p, width / p);
    let len = p * p * INPUT_CHANNELS;
    let mut out = Array2::zeros((rows * cols, len));
    let mut valid = vec![false; rows * cols];
    for pr in 0..rows {
        for pc in 0..cols {
            let k = pr * cols + pc;
            let mut row = out.row_mut(k);
            for r in 0..p {
                for c in 0..p {
                    let pix = (pr * p + r) * width + pc * p + c;
                    valid[k] |= conf[pix] > 0.0;
                    let dst = (r * p + c) * INPUT_CHANNELS;
                    for ch in 0..INPUT_CHANNELS {
                        row[dst + ch] = channels[pix * INPUT_CHANNELS + ch];
                    }
                }
            }
        }
    }
    (out, valid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patch_layout_is_raster_then_channel() {
        let (h, w, p) = (4, 4, 2);
        let channels: Vec<f64> = (0..h * w * INPUT_CHANNELS).map(|v| v as f64).collect();
        let conf = vec![1.0; h * w];
        let (patches, valid) = patchify(&channels, &conf, h, w, p);
        assert_eq!(patches.dim(), (4, p * p * INPUT_CHANNELS));
        assert!(valid.iter().all(|v| *v));
        // patch 1 is the top-right block; its first pixel is (0, 2)
        assert_eq!(patches[[1, 0]], (2 * INPUT_CHANNELS) as f64);
        // second pixel row of patch 2 starts at pixel (3, 0)
        assert_eq!(patches[[2, 2 * INPUT_CHANNELS]], (12 * INPUT_CHANNELS) as f64);
    }
}

//! Forward warping by nearest-pixel splatting with a z-buffer.

use super::{GeometryError, ImageFrame, Projection};

/// A source frame splatted into the reference view.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpResult {
    pub warped: ImageFrame,
    /// True where the target pixel received at least one unoccluded splat.
    pub validity: Vec<bool>,
    /// Depth of the winning splat; `f64::INFINITY` where nothing landed.
    pub depth: Vec<f64>,
}

impl WarpResult {
    pub fn valid_count(&self) -> usize {
        self.validity.iter().filter(|v| **v).count()
    }
}

/// Splats every valid source pixel onto the nearest integer target pixel.
///
/// The target grid has the same dimensions as the source. Collisions keep the
/// smallest depth; on equal depth the earlier source pixel in raster order wins.
pub fn forward_warp(source: &ImageFrame, projected: &Projection) -> Result<WarpResult, GeometryError> {
    let (height, width) = source.dims();
    if (projected.height, projected.width) != (height, width) {
        return Err(GeometryError::DimensionMismatch {
            what: "projection",
            expected: (height, width),
            found: (projected.height, projected.width),
        });
    }
    let n = height * width;
    let mut depth = vec![f64::INFINITY; n];
    let mut winner: Vec<Option<usize>> = vec![None; n];

    for src in 0..n {
        if !projected.valid[src] {
            continue;
        }
        let [u, v] = projected.coords[src];
        let (col, row) = (u.round(), v.round());
        if col < 0.0 || row < 0.0 || col >= width as f64 || row >= height as f64 {
            continue;
        }
        let dst = row as usize * width + col as usize;
        let z = projected.depth[src];
        if z < depth[dst] {
            depth[dst] = z;
            winner[dst] = Some(src);
        }
    }

    let data = source.data();
    let mut warped = vec![0.0; n * 3];
    let mut validity = vec![false; n];
    for (dst, w) in winner.iter().enumerate() {
        if let Some(src) = *w {
            warped[dst * 3..dst * 3 + 3].copy_from_slice(&data[src * 3..src * 3 + 3]);
            validity[dst] = true;
        }
    }
    Ok(WarpResult { warped: ImageFrame::new(height, width, warped)?, validity, depth })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient_frame(h: usize, w: usize) -> ImageFrame {
        let data = (0..h * w)
            .flat_map(|i| {
                let (r, c) = (i / w, i % w);
                [r as f64 / h as f64, c as f64 / w as f64, 0.5]
            })
            .collect();
        ImageFrame::new(h, w, data).unwrap()
    }

    fn projection(h: usize, w: usize, f: impl Fn(usize, usize) -> ([f64; 2], f64, bool)) -> Projection {
        let mut p = Projection {
            height: h,
            width: w,
            coords: vec![],
            depth: vec![],
            valid: vec![],
        };
        for i in 0..h * w {
            let (uv, z, ok) = f(i / w, i % w);
            p.coords.push(uv);
            p.depth.push(z);
            p.valid.push(ok);
        }
        p
    }

    #[test]
    fn identity_geometry_reproduces_source() {
        let src = gradient_frame(8, 10);
        let proj = projection(8, 10, |r, c| ([c as f64, r as f64], 1.0, true));
        let out = forward_warp(&src, &proj).unwrap();
        assert_eq!(out.warped, src);
        assert!(out.validity.iter().all(|v| *v));
    }

    #[test]
    fn all_behind_camera_is_all_invalid() {
        let src = gradient_frame(8, 8);
        let proj = projection(8, 8, |_, _| ([f64::NAN; 2], -1.0, false));
        let out = forward_warp(&src, &proj).unwrap();
        assert_eq!(out.valid_count(), 0);
        assert!(out.depth.iter().all(|d| d.is_infinite()));
    }

    #[test]
    fn nearest_depth_wins_collision() {
        let src = gradient_frame(8, 8);
        // pixels (0,0) and (0,1) both land on (3,3); the second one is closer
        let proj = projection(8, 8, |r, c| match (r, c) {
            (0, 0) => ([3.2, 2.9], 2.0, true),
            (0, 1) => ([2.6, 3.4], 1.0, true),
            _ => ([f64::NAN; 2], 0.0, false),
        });
        let out = forward_warp(&src, &proj).unwrap();
        assert_eq!(out.valid_count(), 1);
        assert_eq!(out.warped.pixel(3, 3), src.pixel(0, 1));
        assert_eq!(out.depth[3 * 8 + 3], 1.0);

        // same collision with the order of depths swapped
        let proj = projection(8, 8, |r, c| match (r, c) {
            (0, 0) => ([3.2, 2.9], 1.0, true),
            (0, 1) => ([2.6, 3.4], 2.0, true),
            _ => ([f64::NAN; 2], 0.0, false),
        });
        let out = forward_warp(&src, &proj).unwrap();
        assert_eq!(out.warped.pixel(3, 3), src.pixel(0, 0));
    }

    #[test]
    fn out_of_bounds_splats_are_dropped() {
        let src = gradient_frame(8, 8);
        let proj = projection(8, 8, |r, c| ([c as f64 + 20.0, r as f64 - 0.6], 1.0, true));
        let out = forward_warp(&src, &proj).unwrap();
        assert_eq!(out.valid_count(), 0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let src = gradient_frame(8, 8);
        let proj = projection(8, 9, |r, c| ([c as f64, r as f64], 1.0, true));
        assert!(forward_warp(&src, &proj).is_err());
    }
}

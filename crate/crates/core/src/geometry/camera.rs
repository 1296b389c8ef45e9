//! Pinhole camera model.
//!
//! A camera-frame point `(x, y, z)` maps to pixel coordinates
//!
//! ```text
//! u = cx + fx * x / z
//! v = cy + fy * y / z
//! ```
//!
//! Pixel `(row, col)` has its center at `(u, v) = (col, row)`.

use super::{GeometryError, PointMap};

/// Points with `z <= MIN_DEPTH` are at or behind the camera plane.
pub const MIN_DEPTH: f64 = 1e-6;

/// Minimum number of in-front points required by [`estimate_focal`].
pub const MIN_FOCAL_SUPPORT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        let k = Self { fx, fy, cx, cy };
        if !(fx.is_finite() && fy.is_finite() && fx > 0.0 && fy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={fx} fy={fy}"
            )));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "principal point must be finite, got ({cx}, {cy})"
            )));
        }
        Ok(k)
    }

    /// Square pixels with the principal point at the image center.
    pub fn centered(focal: f64, height: usize, width: usize) -> Result<Self, GeometryError> {
        Self::new(focal, focal, width as f64 / 2.0, height as f64 / 2.0)
    }

    /// Checks that the principal point lies strictly inside a `height x width` image.
    pub fn check_frame(&self, height: usize, width: usize) -> Result<(), GeometryError> {
        if self.cx <= 0.0 || self.cx >= width as f64 || self.cy <= 0.0 || self.cy >= height as f64 {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "principal point ({}, {}) is outside the {height}x{width} image",
                self.cx, self.cy
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn project(&self, p: [f64; 3]) -> Option<[f64; 2]> {
        if p[2] <= MIN_DEPTH {
            return None;
        }
        Some([self.cx + self.fx * p[0] / p[2], self.cy + self.fy * p[1] / p[2]])
    }

    /// Point at `depth` along the ray through pixel coordinates `(u, v)`.
    #[inline]
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> [f64; 3] {
        [depth * (u - self.cx) / self.fx, depth * (v - self.cy) / self.fy, depth]
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.fx, self.fy, self.cx, self.cy]
    }
}

/// Per-pixel pixel coordinates of a projected point map.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub height: usize,
    pub width: usize,
    /// `(u, v)` for every source pixel; `[NaN, NaN]` where `valid` is false.
    pub coords: Vec<[f64; 2]>,
    /// Camera-frame depth of every source point.
    pub depth: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Projects every point of `points` through `intrinsics`. No clipping to image bounds.
pub fn project_points(points: &PointMap, intrinsics: &CameraIntrinsics) -> Projection {
    let n = points.points().len();
    let mut coords = Vec::with_capacity(n);
    let mut depth = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for p in points.points() {
        depth.push(p[2]);
        match intrinsics.project(*p) {
            Some(uv) => {
                coords.push(uv);
                valid.push(true);
            }
            None => {
                coords.push([f64::NAN; 2]);
                valid.push(false);
            }
        }
    }
    Projection { height: points.height(), width: points.width(), coords, depth, valid }
}

/// Lifts a depth map to a point map in the camera frame.
pub fn backproject(
    height: usize,
    width: usize,
    intrinsics: &CameraIntrinsics,
    depth: &[f64],
) -> Result<PointMap, GeometryError> {
    if depth.len() != height * width {
        return Err(GeometryError::DimensionMismatch {
            what: "depth map",
            expected: (height, width),
            found: (depth.len(), 1),
        });
    }
    let mut points = Vec::with_capacity(depth.len());
    for (idx, &d) in depth.iter().enumerate() {
        if !(d.is_finite() && d > 0.0) {
            return Err(GeometryError::NonPositiveDepth { index: idx, value: d });
        }
        let (row, col) = (idx / width, idx % width);
        points.push(intrinsics.unproject(col as f64, row as f64, d));
    }
    PointMap::new(height, width, points)
}

/// Recovers a square-pixel, centered pinhole from a point map expressed in its own camera.
///
/// Solves the weighted least-squares ratio
/// `f = sum w (du*a + dv*b) / sum w (a^2 + b^2)` with `(a, b) = (x/z, y/z)` and
/// `(du, dv)` the pixel offsets from the image center, then repeats once with
/// weights `1 / (1 + r)` from the first pass residuals.
pub fn estimate_focal(pointmap: &PointMap) -> Result<CameraIntrinsics, GeometryError> {
    let (height, width) = pointmap.dims();
    let cx = width as f64 / 2.0;
    let cy = height as f64 / 2.0;

    // (du, dv, a, b) per usable pixel
    let samples: Vec<[f64; 4]> = pointmap
        .points()
        .iter()
        .enumerate()
        .filter(|(_, p)| p[2] > MIN_DEPTH)
        .map(|(idx, p)| {
            let (row, col) = (idx / width, idx % width);
            [col as f64 - cx, row as f64 - cy, p[0] / p[2], p[1] / p[2]]
        })
        .collect();
    if samples.len() < MIN_FOCAL_SUPPORT {
        return Err(GeometryError::InsufficientPoints {
            found: samples.len(),
            required: MIN_FOCAL_SUPPORT,
        });
    }

    let solve = |weights: &dyn Fn(&[f64; 4]) -> f64| -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for s in &samples {
            let w = weights(s);
            num += w * (s[0] * s[2] + s[1] * s[3]);
            den += w * (s[2] * s[2] + s[3] * s[3]);
        }
        if den > 0.0 {
            num / den
        } else {
            f64::NAN
        }
    };

    let first = solve(&|_| 1.0);
    let refined = solve(&|s| {
        let r = (s[0] - first * s[2]).hypot(s[1] - first * s[3]);
        1.0 / (1.0 + r)
    });
    if !(refined.is_finite() && refined > 0.0) {
        return Err(GeometryError::NonPositiveFocal(refined));
    }
    CameraIntrinsics::new(refined, refined, cx, cy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k100() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 32.0, 32.0).unwrap()
    }

    #[test]
    fn projects_pinhole_examples() {
        let k = k100();
        assert_eq!(k.project([0.0, 0.0, 2.0]), Some([32.0, 32.0]));
        assert_eq!(k.project([1.0, 0.0, 2.0]), Some([82.0, 32.0]));
        assert_eq!(k.project([0.0, 0.0, -1.0]), None);
        assert_eq!(k.project([0.0, 0.0, MIN_DEPTH]), None);
    }

    #[test]
    fn project_points_flags_behind_camera() {
        let pm = PointMap::new(1, 3, vec![[0.0, 0.0, 2.0], [1.0, 0.0, 2.0], [0.0, 0.0, -1.0]]).unwrap();
        let proj = project_points(&pm, &k100());
        assert_eq!(proj.valid, vec![true, true, false]);
        assert_eq!(proj.coords[1], [82.0, 32.0]);
        assert!(proj.coords[2][0].is_nan());
    }

    #[test]
    fn backproject_examples() {
        let k = k100();
        let pm = backproject(64, 64, &k, &vec![1.0; 64 * 64]).unwrap();
        assert_eq!(pm.point(32, 32), [0.0, 0.0, 1.0]);

        let mut depth = vec![1.0; 64 * 100];
        depth[32 * 100 + 82] = 2.0;
        let pm = backproject(64, 100, &k, &depth).unwrap();
        assert_eq!(pm.point(32, 82), [1.0, 0.0, 2.0]);
    }

    #[test]
    fn backproject_rejects_nonpositive_depth() {
        let mut depth = vec![1.0; 16];
        depth[5] = 0.0;
        match backproject(4, 4, &k100(), &depth) {
            Err(GeometryError::NonPositiveDepth { index: 5, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_intrinsics() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(CameraIntrinsics::new(1.0, -1.0, 1.0, 1.0).is_err());
        let k = k100();
        assert!(k.check_frame(64, 64).is_ok());
        assert!(k.check_frame(16, 16).is_err());
    }

    #[test]
    fn focal_errors_on_degenerate_input() {
        let zeros = PointMap::new(16, 16, vec![[0.0; 3]; 256]).unwrap();
        assert!(matches!(
            estimate_focal(&zeros),
            Err(GeometryError::InsufficientPoints { found: 0, .. })
        ));
        // every point mirrored through the optical axis gives a negative ratio
        let k = CameraIntrinsics::centered(80.0, 16, 16).unwrap();
        let pm = backproject(16, 16, &k, &[2.0; 256]).unwrap();
        let flipped = PointMap::new(
            16,
            16,
            pm.points().iter().map(|p| [-p[0], -p[1], p[2]]).collect(),
        )
        .unwrap();
        assert!(matches!(estimate_focal(&flipped), Err(GeometryError::NonPositiveFocal(_))));
    }
}

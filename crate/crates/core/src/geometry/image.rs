//! Dense per-pixel containers: RGB frames, point maps and confidence maps.

use super::GeometryError;

/// Smallest accepted frame side, in pixels.
pub const MIN_FRAME_SIDE: usize = 8;

/// An `H x W x 3` RGB frame with intensities in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFrame {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageFrame {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self, GeometryError> {
        if height < MIN_FRAME_SIDE || width < MIN_FRAME_SIDE {
            return Err(GeometryError::InvalidImage(format!(
                "frame is {height}x{width}, both sides must be at least {MIN_FRAME_SIDE}"
            )));
        }
        if data.len() != height * width * 3 {
            return Err(GeometryError::InvalidImage(format!(
                "expected {} intensities for a {height}x{width} frame, got {}",
                height * width * 3,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(GeometryError::InvalidImage(format!(
                "intensity {} at flat index {pos} is outside [0, 1]",
                data[pos]
            )));
        }
        Ok(Self { height, width, data })
    }

    /// Frame filled with one color.
    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Result<Self, GeometryError> {
        let data = (0..height * width).flat_map(|_| rgb).collect();
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// Per-pixel 3D points expressed in a reference camera frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMap {
    height: usize,
    width: usize,
    points: Vec<[f64; 3]>,
}

impl PointMap {
    pub fn new(height: usize, width: usize, points: Vec<[f64; 3]>) -> Result<Self, GeometryError> {
        if points.len() != height * width {
            return Err(GeometryError::DimensionMismatch {
                what: "point map",
                expected: (height, width),
                found: (points.len(), 1),
            });
        }
        if let Some(pos) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(GeometryError::NonFinite { what: "point map", index: pos });
        }
        Ok(Self { height, width, points })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    #[inline]
    pub fn point(&self, row: usize, col: usize) -> [f64; 3] {
        self.points[row * self.width + col]
    }

    /// Multiplies every point by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| [p[0] * factor, p[1] * factor, p[2] * factor])
            .collect();
        Self { height: self.height, width: self.width, points }
    }
}

/// Non-negative per-pixel confidences paired with a [`PointMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl ConfidenceMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() != height * width {
            return Err(GeometryError::DimensionMismatch {
                what: "confidence map",
                expected: (height, width),
                found: (values.len(), 1),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(GeometryError::NonFinite { what: "confidence map", index: pos });
        }
        Ok(Self { height, width, values })
    }

    pub fn uniform(height: usize, width: usize, value: f64) -> Result<Self, GeometryError> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

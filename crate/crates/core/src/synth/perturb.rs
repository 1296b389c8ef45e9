//! Noise models for inconsistent (fake) sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::scene::{Deformation, HeightField};

/// Magnitudes of the three perturbation families plus the stream seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    /// Std-dev of the per-frame, per-node surface jitter (world units, all three axes).
    pub geometry_sigma: f64,
    /// Std-dev of per-frame, per-pixel intensity noise.
    pub texture_drift: f64,
    /// Amplitude of a per-frame global brightness offset drawn from `U(-1, 1)`.
    pub flicker_amp: f64,
    pub seed: u64,
}

impl PerturbationSpec {
    pub const NONE: PerturbationSpec =
        PerturbationSpec { geometry_sigma: 0.0, texture_drift: 0.0, flicker_amp: 0.0, seed: 0 };

    pub fn geometry(sigma: f64, seed: u64) -> Self {
        Self { geometry_sigma: sigma, seed, ..Self::NONE }
    }

    pub fn is_identity(&self) -> bool {
        self.geometry_sigma == 0.0 && self.texture_drift == 0.0 && self.flicker_amp == 0.0
    }

    pub fn is_valid(&self) -> bool {
        [self.geometry_sigma, self.texture_drift, self.flicker_amp]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Unit-variance draws for one frame. Scaling by the spec's magnitudes happens
/// afterwards, so draws for a given `(seed, frame)` are shared across magnitudes.
pub(crate) struct FrameNoise {
    pub node: [Vec<f64>; 3],
    pub pixel: Vec<f64>,
    pub flicker: f64,
}

impl FrameNoise {
    pub fn draw(seed: u64, frame: usize, nodes: usize, pixels: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(frame as u64);
        let mut normals = |n: usize| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect::<Vec<_>>();
        let node = [normals(nodes), normals(nodes), normals(nodes)];
        let pixel = normals(pixels * 3);
        let flicker = rng.random_range(-1.0..1.0);
        Self { node, pixel, flicker }
    }

    pub fn deformation(&self, field: &HeightField, sigma: f64) -> Option<Deformation> {
        if sigma == 0.0 {
            return None;
        }
        debug_assert_eq!(self.node[0].len(), field.heights.len());
        let scale = |v: &Vec<f64>| v.iter().map(|n| n * sigma).collect();
        Some(Deformation { dx: scale(&self.node[0]), dy: scale(&self.node[1]), dz: scale(&self.node[2]) })
    }

    /// Adds intensity noise and the brightness offset, clamping to `[0, 1]`.
    pub fn apply_photometric(&self, rgb: &mut [f64], drift: f64, flicker_amp: f64) {
        if drift == 0.0 && flicker_amp == 0.0 {
            return;
        }
        let offset = flicker_amp * self.flicker;
        for (v, n) in rgb.iter_mut().zip(&self.pixel) {
            *v = (*v + drift * n + offset).clamp(0.0, 1.0);
        }
    }
}

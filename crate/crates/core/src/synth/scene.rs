//! Textured height-field world and its ray caster.
//!
//! The surface is `z = base_depth - h(x, y)` in world coordinates, with `h`
//! bilinearly interpolated from a regular grid. Colors come from a seeded sum
//! of sinusoids evaluated at the surface point's material coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::pose::CameraPose;
use super::SynthError;
use crate::geometry::{CameraIntrinsics, ImageFrame};

const GRID_HALF_EXTENT: f64 = 2.5;
const GRID_SPACING: f64 = 0.1;
const MARCH_STEPS: usize = 32;
const BISECTION_STEPS: usize = 64;

/// Regular grid of heights over `[-extent, extent]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    pub half_extent: f64,
    pub spacing: f64,
    pub nodes: usize,
    pub heights: Vec<f64>,
}

impl HeightField {
    pub fn flat() -> Self {
        let nodes = (2.0 * GRID_HALF_EXTENT / GRID_SPACING).round() as usize + 1;
        Self { half_extent: GRID_HALF_EXTENT, spacing: GRID_SPACING, nodes, heights: vec![0.0; nodes * nodes] }
    }

    pub fn node_position(&self, ix: usize, iy: usize) -> (f64, f64) {
        (-self.half_extent + ix as f64 * self.spacing, -self.half_extent + iy as f64 * self.spacing)
    }

    /// Bilinear interpolation of `grid` (laid out like `heights`), clamped at the border.
    #[inline]
    pub fn sample(&self, grid: &[f64], x: f64, y: f64) -> f64 {
        let last = (self.nodes - 1) as f64;
        let gx = ((x + self.half_extent) / self.spacing).clamp(0.0, last);
        let gy = ((y + self.half_extent) / self.spacing).clamp(0.0, last);
        let ix = (gx.floor() as usize).min(self.nodes - 2);
        let iy = (gy.floor() as usize).min(self.nodes - 2);
        let (fx, fy) = (gx - ix as f64, gy - iy as f64);
        let n = self.nodes;
        let h00 = grid[iy * n + ix];
        let h10 = grid[iy * n + ix + 1];
        let h01 = grid[(iy + 1) * n + ix];
        let h11 = grid[(iy + 1) * n + ix + 1];
        (h00 * (1.0 - fx) + h10 * fx) * (1.0 - fy) + (h01 * (1.0 - fx) + h11 * fx) * fy
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave {
    pub amplitude: f64,
    pub kx: f64,
    pub ky: f64,
    pub phase: f64,
}

/// Per-channel sums of plane waves around mid-gray.
#[derive(Debug, Clone, PartialEq)]
pub struct ProceduralTexture {
    pub channels: [Vec<Wave>; 3],
}

impl ProceduralTexture {
    pub fn random(rng: &mut impl Rng) -> Self {
        let mut channel = || {
            (0..4)
                .map(|_| {
                    let freq = rng.random_range(6.0..14.0);
                    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    Wave {
                        amplitude: rng.random_range(0.05..0.1),
                        kx: freq * angle.cos(),
                        ky: freq * angle.sin(),
                        phase: rng.random_range(0.0..std::f64::consts::TAU),
                    }
                })
                .collect::<Vec<_>>()
        };
        Self { channels: [channel(), channel(), channel()] }
    }

    #[inline]
    pub fn color(&self, x: f64, y: f64) -> [f64; 3] {
        self.channels.each_ref().map(|waves| {
            let v: f64 = waves.iter().map(|w| w.amplitude * (w.kx * x + w.ky * y + w.phase).sin()).sum();
            (0.5 + v).clamp(0.0, 1.0)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub base_depth: f64,
    pub field: HeightField,
    pub texture: ProceduralTexture,
}

impl Scene {
    /// Flat plane at `base_depth` with a seeded texture.
    pub fn flat(base_depth: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self { base_depth, field: HeightField::flat(), texture: ProceduralTexture::random(&mut rng) }
    }

    /// Plane at `base_depth` with a few smooth Gaussian bumps.
    pub fn random(base_depth: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let texture = ProceduralTexture::random(&mut rng);
        let mut field = HeightField::flat();
        let bumps: Vec<[f64; 4]> = (0..4)
            .map(|_| {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    sign * rng.random_range(0.03..0.12),
                    rng.random_range(0.2..0.5),
                ]
            })
            .collect();
        for iy in 0..field.nodes {
            for ix in 0..field.nodes {
                let (x, y) = field.node_position(ix, iy);
                field.heights[iy * field.nodes + ix] = bumps
                    .iter()
                    .map(|[bx, by, a, s]| a * (-((x - bx).powi(2) + (y - by).powi(2)) / (2.0 * s * s)).exp())
                    .sum();
            }
        }
        Self { base_depth, field, texture }
    }

    /// The fixed scene used for calibration experiments.
    pub fn standard() -> Self {
        Self::random(STANDARD_DEPTH, 7)
    }
}

pub const STANDARD_DEPTH: f64 = 1.5;

/// Per-node displacement of the surface: `(dx, dy)` moves material laterally,
/// `dz` moves it along world z.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dz: Vec<f64>,
}

/// Depth value for rays that miss the surface.
pub const MISS_DEPTH: f64 = f64::INFINITY;

/// One ray-cast view.
#[derive(Debug, Clone, PartialEq)]
pub struct Render {
    pub frame: ImageFrame,
    /// Camera-frame depth of each hit, [`MISS_DEPTH`] on misses.
    pub depth: Vec<f64>,
    /// World-space hit point per pixel.
    pub hits: Vec<Option<[f64; 3]>>,
}

pub fn render_view(
    scene: &Scene,
    pose: &CameraPose,
    intrinsics: &CameraIntrinsics,
    height: usize,
    width: usize,
) -> Result<Render, SynthError> {
    render_deformed(scene, None, pose, intrinsics, height, width)
}

/// Ray casts `scene`, optionally with a surface deformation applied.
pub fn render_deformed(
    scene: &Scene,
    deformation: Option<&Deformation>,
    pose: &CameraPose,
    intrinsics: &CameraIntrinsics,
    height: usize,
    width: usize,
) -> Result<Render, SynthError> {
    let field = &scene.field;
    // surface z = base_depth - effective height
    let effective: Vec<f64> = match deformation {
        Some(d) => field.heights.iter().zip(&d.dz).map(|(h, dz)| h - dz).collect(),
        None => field.heights.clone(),
    };
    let (hmin, hmax) = effective.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| (lo.min(*h), hi.max(*h)));
    let z_near = scene.base_depth - hmax - 1e-9;
    let z_far = scene.base_depth - hmin + 1e-9;

    let origin = pose.center();
    let n = height * width;
    let mut rgb = Vec::with_capacity(n * 3);
    let mut depth = Vec::with_capacity(n);
    let mut hits = Vec::with_capacity(n);
    for row in 0..height {
        for col in 0..width {
            let cam_dir = intrinsics.unproject(col as f64, row as f64, 1.0);
            let dir = pose.direction_to_world(cam_dir);
            let hit = cast(field, &effective, scene.base_depth, origin, dir, z_near, z_far);
            match hit {
                Some(p) => {
                    let (mx, my) = match deformation {
                        Some(d) => (p[0] - field.sample(&d.dx, p[0], p[1]), p[1] - field.sample(&d.dy, p[0], p[1])),
                        None => (p[0], p[1]),
                    };
                    rgb.extend_from_slice(&scene.texture.color(mx, my));
                    depth.push(pose.world_to_camera(p)[2]);
                    hits.push(Some(p));
                }
                None => {
                    rgb.extend_from_slice(&[0.0; 3]);
                    depth.push(MISS_DEPTH);
                    hits.push(None);
                }
            }
        }
    }
    if hits.iter().all(Option::is_none) {
        return Err(SynthError::NothingVisible);
    }
    let frame = ImageFrame::new(height, width, rgb)?;
    Ok(Render { frame, depth, hits })
}

/// First intersection of `origin + t * dir` with the surface inside the slab
/// `z_near <= z <= z_far`: coarse march for a sign change, then bisection.
fn cast(
    field: &HeightField,
    heights: &[f64],
    base_depth: f64,
    origin: [f64; 3],
    dir: [f64; 3],
    z_near: f64,
    z_far: f64,
) -> Option<[f64; 3]> {
    if dir[2] <= 0.0 {
        return None;
    }
    let at = |t: f64| [origin[0] + t * dir[0], origin[1] + t * dir[1], origin[2] + t * dir[2]];
    // positive once the ray point is at or behind the surface
    let gap = |t: f64| {
        let p = at(t);
        p[2] - (base_depth - field.sample(heights, p[0], p[1]))
    };
    let t0 = ((z_near - origin[2]) / dir[2]).max(0.0);
    let t1 = (z_far - origin[2]) / dir[2];
    if t1 <= t0 {
        return None;
    }
    let mut lo = t0;
    if gap(lo) >= 0.0 {
        return Some(at(lo));
    }
    let step = (t1 - t0) / MARCH_STEPS as f64;
    let mut hi = None;
    for k in 1..=MARCH_STEPS {
        let t = t0 + step * k as f64;
        if gap(t) >= 0.0 {
            hi = Some(t);
            break;
        }
        lo = t;
    }
    let mut hi = hi?;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(at(hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_plane_depth_is_constant() {
        let scene = Scene::flat(2.0, 3);
        let k = CameraIntrinsics::centered(40.0, 16, 16).unwrap();
        let r = render_view(&scene, &CameraPose::identity(), &k, 16, 16).unwrap();
        for d in &r.depth {
            assert!((d - 2.0).abs() < 1e-12, "depth {d}");
        }
    }

    #[test]
    fn bumpy_hits_lie_on_surface() {
        let scene = Scene::standard();
        let k = CameraIntrinsics::centered(64.0, 32, 32).unwrap();
        let pose = CameraPose::orbit([0.1, 0.0, scene.base_depth], scene.base_depth, 0.1, -0.05);
        let r = render_view(&scene, &pose, &k, 32, 32).unwrap();
        for p in r.hits.iter().flatten() {
            let surf = scene.base_depth - scene.field.sample(&scene.field.heights, p[0], p[1]);
            assert!((p[2] - surf).abs() < 1e-9);
        }
        assert!(r.hits.iter().all(Option::is_some));
    }

    #[test]
    fn looking_away_sees_nothing() {
        let scene = Scene::flat(2.0, 0);
        let k = CameraIntrinsics::centered(40.0, 16, 16).unwrap();
        let pose = CameraPose::orbit([0.0, 0.0, 2.0], 2.0, std::f64::consts::PI, 0.0);
        assert!(matches!(render_view(&scene, &pose, &k, 16, 16), Err(SynthError::NothingVisible)));
    }

    #[test]
    fn texture_stays_in_unit_range() {
        let scene = Scene::random(1.5, 99);
        for i in 0..200 {
            let c = scene.texture.color(i as f64 * 0.037 - 3.0, 1.0 - i as f64 * 0.011);
            assert!(c.iter().all(|v| (0.1..=0.9).contains(v)));
        }
    }
}

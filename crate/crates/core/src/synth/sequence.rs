use rand::Rng;

use super::perturb::{FrameNoise, PerturbationSpec};
use super::pose::CameraPose;
use super::scene::{render_deformed, render_view, Render, Scene};
use super::SynthError;
use crate::geometry::{CameraIntrinsics, ConfidenceMap, ImageFrame, PointMap};
use crate::io::{Label, PairRecord, VideoData};

/// Exact two-view point maps for `(view 1, view 2)`, both in camera 1.
pub fn oracle_pointmaps(
    scene: &Scene,
    pose1: &CameraPose,
    pose2: &CameraPose,
    intrinsics: &CameraIntrinsics,
    height: usize,
    width: usize,
) -> Result<PairRecord, SynthError> {
    let r1 = render_view(scene, pose1, intrinsics, height, width)?;
    let r2 = render_view(scene, pose2, intrinsics, height, width)?;
    pair_from_renders(&r1, &r2, pose1, intrinsics, height, width)
}

fn pair_from_renders(
    view1: &Render,
    view2: &Render,
    pose1: &CameraPose,
    intrinsics: &CameraIntrinsics,
    height: usize,
    width: usize,
) -> Result<PairRecord, SynthError> {
    let lift = |r: &Render| {
        let pts = r.hits.iter().map(|h| h.map_or([0.0; 3], |p| pose1.world_to_camera(p))).collect();
        let conf = r.hits.iter().map(|h| if h.is_some() { 1.0 } else { 0.0 }).collect();
        Ok::<_, SynthError>((PointMap::new(height, width, pts)?, ConfidenceMap::new(height, width, conf)?))
    };
    let (x11, c11) = lift(view1)?;
    let (x21, c21) = lift(view2)?;
    Ok(PairRecord::new(x11, x21, c11, c21, Some(*intrinsics))?)
}

/// A rendered sequence with its oracle pair records and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSequence {
    pub frames: Vec<ImageFrame>,
    /// `pairs[t - 1]` is the oracle record of `(frame t, frame t - 1)`,
    /// always derived from the unperturbed geometry.
    pub pairs: Vec<PairRecord>,
    pub intrinsics: CameraIntrinsics,
    pub label: Label,
    pub perturbation: PerturbationSpec,
    pub scene: Scene,
    pub poses: Vec<CameraPose>,
}

impl SyntheticSequence {
    /// Renders an unperturbed (real) sequence along `poses`.
    pub fn render(
        scene: Scene,
        poses: Vec<CameraPose>,
        intrinsics: CameraIntrinsics,
        height: usize,
        width: usize,
    ) -> Result<Self, SynthError> {
        if poses.len() < 2 {
            return Err(SynthError::TooFewFrames(poses.len()));
        }
        let renders = poses
            .iter()
            .map(|p| render_view(&scene, p, &intrinsics, height, width))
            .collect::<Result<Vec<_>, _>>()?;
        let pairs = (1..renders.len())
            .map(|t| pair_from_renders(&renders[t], &renders[t - 1], &poses[t], &intrinsics, height, width))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            frames: renders.into_iter().map(|r| r.frame).collect(),
            pairs,
            intrinsics,
            label: Label::Real,
            perturbation: PerturbationSpec::NONE,
            scene,
            poses,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    pub fn to_video(&self) -> VideoData {
        VideoData::new(self.frames.clone(), self.pairs.clone()).expect("sequence invariants hold")
    }
}

/// Re-renders every frame with independent per-frame noise drawn from `spec`.
///
/// Pair records are left untouched: they describe the clean geometry, so the
/// reprojection residual exposes the injected inconsistency. A spec with all
/// magnitudes zero returns the input unchanged.
pub fn perturb(seq: &SyntheticSequence, spec: &PerturbationSpec) -> Result<SyntheticSequence, SynthError> {
    if !spec.is_valid() {
        return Err(SynthError::InvalidPerturbation(*spec));
    }
    if spec.is_identity() {
        return Ok(seq.clone());
    }
    let (height, width) = seq.dims();
    let field = &seq.scene.field;
    let mut frames = Vec::with_capacity(seq.frames.len());
    for (t, pose) in seq.poses.iter().enumerate() {
        let noise = FrameNoise::draw(spec.seed, t, field.heights.len(), height * width);
        let deformation = noise.deformation(field, spec.geometry_sigma);
        let render = render_deformed(&seq.scene, deformation.as_ref(), pose, &seq.intrinsics, height, width)?;
        let mut rgb = render.frame.into_data();
        noise.apply_photometric(&mut rgb, spec.texture_drift, spec.flicker_amp);
        frames.push(ImageFrame::new(height, width, rgb)?);
    }
    Ok(SyntheticSequence { frames, label: Label::Fake, perturbation: *spec, ..seq.clone() })
}

/// Orbit parameters for a camera path around a point on the base plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    pub target: [f64; 2],
    pub yaw0: f64,
    pub pitch0: f64,
    pub yaw_step: f64,
    pub pitch_step: f64,
}

impl Trajectory {
    pub fn random(rng: &mut impl Rng) -> Self {
        let deg = std::f64::consts::PI / 180.0;
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        Self {
            target: [rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)],
            yaw0: rng.random_range(-8.0..8.0) * deg,
            pitch0: rng.random_range(-8.0..8.0) * deg,
            yaw_step: sign * rng.random_range(1.5..3.0) * deg,
            pitch_step: rng.random_range(-1.0..1.0) * deg,
        }
    }

    pub fn poses(&self, scene: &Scene, frames: usize) -> Vec<CameraPose> {
        let target = [self.target[0], self.target[1], scene.base_depth];
        (0..frames)
            .map(|t| {
                let t = t as f64;
                CameraPose::orbit(target, scene.base_depth, self.yaw0 + t * self.yaw_step, self.pitch0 + t * self.pitch_step)
            })
            .collect()
    }
}

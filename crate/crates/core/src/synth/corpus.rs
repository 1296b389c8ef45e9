use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::perturb::PerturbationSpec;
use super::scene::{Scene, STANDARD_DEPTH};
use super::sequence::{perturb, SyntheticSequence, Trajectory};
use super::SynthError;
use crate::geometry::CameraIntrinsics;
use crate::io::{split_train_test, DatasetManifest, Label, ManifestRow, PromptModality, Split};

/// Generator tag used for real rows.
pub const REAL_GENERATOR: &str = "real";

/// One fake family: a generator tag, its prompt modality, and uniform
/// sampling ranges for each perturbation magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub name: String,
    pub modality: PromptModality,
    pub geometry_sigma: (f64, f64),
    pub texture_drift: (f64, f64),
    pub flicker_amp: (f64, f64),
}

impl FamilySpec {
    fn draw(&self, rng: &mut impl Rng) -> PerturbationSpec {
        let mut pick = |(lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..hi) } else { lo };
        let geometry_sigma = pick(self.geometry_sigma);
        let texture_drift = pick(self.texture_drift);
        let flicker_amp = pick(self.flicker_amp);
        PerturbationSpec { geometry_sigma, texture_drift, flicker_amp, seed: rng.random() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub focal: f64,
    pub families: Vec<FamilySpec>,
    pub test_fraction: f64,
}

impl CorpusConfig {
    /// Four families: texture noise (T2V), geometric jitter (I2V), brightness
    /// flicker (V2V) and a balanced mix (T2V).
    pub fn standard() -> Self {
        let family = |name: &str, modality, geometry_sigma, texture_drift, flicker_amp| FamilySpec {
            name: name.to_string(),
            modality,
            geometry_sigma,
            texture_drift,
            flicker_amp,
        };
        Self {
            frames: 6,
            height: 32,
            width: 32,
            focal: 64.0,
            families: vec![
                family("texture-drift", PromptModality::T2V, (0.02, 0.03), (0.02, 0.05), (0.0, 0.01)),
                family("geometry-jitter", PromptModality::I2V, (0.04, 0.08), (0.0, 0.01), (0.0, 0.01)),
                family("flicker", PromptModality::V2V, (0.02, 0.03), (0.0, 0.01), (0.03, 0.08)),
                family("mixed", PromptModality::T2V, (0.02, 0.05), (0.01, 0.03), (0.01, 0.04)),
            ],
            test_fraction: 0.2,
        }
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics, SynthError> {
        Ok(CameraIntrinsics::centered(self.focal, self.height, self.width)?)
    }
}

/// Generated sequences keyed by id, plus the manifest describing them.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub sequences: BTreeMap<String, SyntheticSequence>,
    pub manifest: DatasetManifest,
    pub split_warnings: Vec<String>,
}

/// Deterministic corpus of `n_real` clean and `n_fake` perturbed sequences.
///
/// Fakes cycle through `config.families` in order. Every sequence gets its own
/// scene and camera path; the manifest is split with `config.test_fraction`.
pub fn make_corpus(n_real: usize, n_fake: usize, config: &CorpusConfig, seed: u64) -> Result<Corpus, SynthError> {
    if n_real == 0 || n_fake == 0 {
        return Err(SynthError::EmptyClass { n_real, n_fake });
    }
    if config.families.is_empty() {
        return Err(SynthError::NoFamilies);
    }
    let intrinsics = config.intrinsics()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sequences = BTreeMap::new();
    let mut rows = Vec::with_capacity(n_real + n_fake);
    for i in 0..n_real + n_fake {
        let id = format!("seq_{i:04}");
        let scene = Scene::random(STANDARD_DEPTH, rng.random());
        let poses = Trajectory::random(&mut rng).poses(&scene, config.frames);
        let clean = SyntheticSequence::render(scene, poses, intrinsics, config.height, config.width)?;
        let (seq, generator, modality) = if i < n_real {
            (clean, REAL_GENERATOR.to_string(), PromptModality::None)
        } else {
            let family = &config.families[(i - n_real) % config.families.len()];
            let spec = family.draw(&mut rng);
            (perturb(&clean, &spec)?, family.name.clone(), family.modality)
        };
        rows.push(ManifestRow {
            id: id.clone(),
            path: id.clone(),
            label: seq.label,
            generator,
            prompt_modality: modality,
            split: Split::Train,
        });
        sequences.insert(id, seq);
    }
    debug_assert!(rows.iter().all(|r| (r.label == Label::Real) == (r.generator == REAL_GENERATOR)));
    let outcome = split_train_test(&DatasetManifest { rows }, config.test_fraction, seed)?;
    Ok(Corpus { sequences, manifest: outcome.manifest, split_warnings: outcome.warnings })
}

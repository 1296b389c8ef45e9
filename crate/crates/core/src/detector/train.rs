use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{accumulate_gradient, bce, forward_scores, video_score, VideoInputs};
use super::params::{DetectorConfig, DetectorParams};
use super::DetectorError;
use crate::io::Label;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    /// Videos per update; 0 means the whole training set.
    pub batch: usize,
    /// Seeds parameter initialization and, for mini-batches, the visiting order.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr: 3e-3, epochs: 150, batch: 0, seed: 7 }
    }
}

/// A training video: precomputed inputs and its label.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub inputs: VideoInputs,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: DetectorParams,
    /// Mean training loss of each epoch, measured before its updates, then the
    /// loss of the returned parameters.
    pub loss_curve: Vec<f64>,
}

/// Adam with the usual defaults (`beta1 = 0.9`, `beta2 = 0.999`, `eps = 1e-8`).
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    step: i32,
    m: DetectorParams,
    v: DetectorParams,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(config: DetectorConfig, lr: f64) -> Self {
        Self { lr, step: 0, m: DetectorParams::zeros(config), v: DetectorParams::zeros(config) }
    }

    pub fn update(&mut self, params: &mut DetectorParams, grads: &DetectorParams) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        let lr = self.lr;
        let tensors = params.tensors_mut().into_iter().zip(grads.tensors());
        for (((_, p), (_, g)), ((_, m), (_, v))) in
            tensors.zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()))
        {
            ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
                *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
            });
        }
    }
}

/// Mean cross-entropy of `params` over `examples`.
pub fn mean_loss(examples: &[TrainingExample], params: &DetectorParams) -> f64 {
    let total: f64 = examples.iter().map(|e| bce(video_score(&forward_scores(&e.inputs, params)), e.label)).sum();
    total / examples.len() as f64
}

/// Mean loss and its gradient over a subset of examples.
pub fn loss_and_gradient(examples: &[&TrainingExample], params: &DetectorParams) -> (f64, DetectorParams) {
    let mut grads = DetectorParams::zeros(params.config);
    let w = 1.0 / examples.len() as f64;
    let loss: f64 = examples.iter().map(|e| accumulate_gradient(&e.inputs, e.label, params, w, &mut grads)).sum();
    (loss * w, grads)
}

/// Trains from a seeded initialization with Adam on the video-level
/// cross-entropy. Final parameters are rounded to `f32` so that a saved
/// checkpoint reproduces them exactly.
pub fn train(
    examples: &[TrainingExample],
    detector: DetectorConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome, DetectorError> {
    let n_fake = examples.iter().filter(|e| e.label.is_fake()).count();
    if n_fake == 0 || n_fake == examples.len() {
        return Err(DetectorError::SingleClass { n_real: examples.len() - n_fake, n_fake });
    }
    if !(config.lr.is_finite() && config.lr >= 0.0) {
        return Err(DetectorError::Hyperparameter(format!("learning rate {}", config.lr)));
    }
    let mut params = DetectorParams::init(detector, config.seed).rounded_to_f32();
    let mut adam = Adam::new(detector, config.lr);
    let mut order: Vec<&TrainingExample> = examples.iter().collect();
    let batch = if config.batch == 0 { examples.len() } else { config.batch.min(examples.len()) };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut loss_curve = Vec::with_capacity(config.epochs + 1);

    for _ in 0..config.epochs {
        if batch < examples.len() {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let (loss, grads) = loss_and_gradient(chunk, &params);
            epoch_loss += loss * chunk.len() as f64;
            adam.update(&mut params, &grads);
        }
        loss_curve.push(epoch_loss / examples.len() as f64);
        if !params.is_finite() {
            return Err(DetectorError::Diverged);
        }
    }
    let params = params.rounded_to_f32();
    loss_curve.push(mean_loss(examples, &params));
    Ok(TrainOutcome { params, loss_curve })
}

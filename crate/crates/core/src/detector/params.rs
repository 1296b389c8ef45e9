use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Channels per pixel fed to the patch embedding: RGB, normalized point,
/// squashed confidence, scaled residual, residual validity.
pub const INPUT_CHANNELS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub patch: usize,
    pub dim: usize,
    pub memory_capacity: usize,
    pub ffn_hidden: usize,
    pub scorer_hidden: usize,
    /// Multiplier applied to the residual channel before embedding.
    pub residual_gain: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { patch: 8, dim: 32, memory_capacity: 16, ffn_hidden: 64, scorer_hidden: 16, residual_gain: 10.0 }
    }
}

impl DetectorConfig {
    pub fn patch_len(&self) -> usize {
        INPUT_CHANNELS * self.patch * self.patch
    }
}

/// Every trainable tensor of the detector. Biases are stored as `1 x n` rows.
///
/// The same struct doubles as the gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorParams {
    pub config: DetectorConfig,
    pub patch_w: Array2<f64>,
    pub patch_b: Array2<f64>,
    pub enc_wq: Array2<f64>,
    pub enc_wk: Array2<f64>,
    pub enc_wv: Array2<f64>,
    pub enc_w1: Array2<f64>,
    pub enc_b1: Array2<f64>,
    pub enc_w2: Array2<f64>,
    pub enc_b2: Array2<f64>,
    pub mem_wq: Array2<f64>,
    pub mem_wk: Array2<f64>,
    pub dec_w: Array2<f64>,
    pub dec_b: Array2<f64>,
    pub dec_w1: Array2<f64>,
    pub dec_b1: Array2<f64>,
    pub dec_w2: Array2<f64>,
    pub dec_b2: Array2<f64>,
    pub score_w1: Array2<f64>,
    pub score_b1: Array2<f64>,
    pub score_w2: Array2<f64>,
    pub score_b2: Array2<f64>,
}

/// Canonical tensor names, in storage order. The prefix before the last `.`
/// names the block a tensor belongs to.
pub const PARAM_NAMES: [&str; 21] = [
    "patch.w",
    "patch.b",
    "encoder.attn.wq",
    "encoder.attn.wk",
    "encoder.attn.wv",
    "encoder.ffn.w1",
    "encoder.ffn.b1",
    "encoder.ffn.w2",
    "encoder.ffn.b2",
    "memory.read.wq",
    "memory.write.wk",
    "decoder.proj.w",
    "decoder.proj.b",
    "decoder.ffn.w1",
    "decoder.ffn.b1",
    "decoder.ffn.w2",
    "decoder.ffn.b2",
    "scorer.w1",
    "scorer.b1",
    "scorer.w2",
    "scorer.b2",
];

impl DetectorParams {
    pub fn zeros(config: DetectorConfig) -> Self {
        let (d, f, s) = (config.dim, config.ffn_hidden, config.scorer_hidden);
        let z = |r: usize, c: usize| Array2::zeros((r, c));
        Self {
            config,
            patch_w: z(config.patch_len(), d),
            patch_b: z(1, d),
            enc_wq: z(d, d),
            enc_wk: z(d, d),
            enc_wv: z(d, d),
            enc_w1: z(d, f),
            enc_b1: z(1, f),
            enc_w2: z(f, d),
            enc_b2: z(1, d),
            mem_wq: z(d, d),
            mem_wk: z(d, d),
            dec_w: z(2 * d, d),
            dec_b: z(1, d),
            dec_w1: z(d, f),
            dec_b1: z(1, f),
            dec_w2: z(f, d),
            dec_b2: z(1, d),
            score_w1: z(d, s),
            score_b1: z(1, s),
            score_w2: z(s, 1),
            score_b2: z(1, 1),
        }
    }

    /// Gaussian weights with variance `1 / fan_in` and zero biases.
    pub fn init(config: DetectorConfig, seed: u64) -> Self {
        let mut params = Self::zeros(config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (name, t) in params.tensors_mut() {
            if name.ends_with(".b") || name.ends_with(".b1") || name.ends_with(".b2") {
                continue;
            }
            let normal = Normal::new(0.0, (1.0 / t.nrows() as f64).sqrt()).expect("positive std");
            t.mapv_inplace(|_| normal.sample(&mut rng));
        }
        params
    }

    pub fn tensors(&self) -> [(&'static str, &Array2<f64>); 21] {
        let t = [
            &self.patch_w,
            &self.patch_b,
            &self.enc_wq,
            &self.enc_wk,
            &self.enc_wv,
            &self.enc_w1,
            &self.enc_b1,
            &self.enc_w2,
            &self.enc_b2,
            &self.mem_wq,
            &self.mem_wk,
            &self.dec_w,
            &self.dec_b,
            &self.dec_w1,
            &self.dec_b1,
            &self.dec_w2,
            &self.dec_b2,
            &self.score_w1,
            &self.score_b1,
            &self.score_w2,
            &self.score_b2,
        ];
        let mut i = 0;
        t.map(|a| {
            i += 1;
            (PARAM_NAMES[i - 1], a)
        })
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut Array2<f64>); 21] {
        let t = [
            &mut self.patch_w,
            &mut self.patch_b,
            &mut self.enc_wq,
            &mut self.enc_wk,
            &mut self.enc_wv,
            &mut self.enc_w1,
            &mut self.enc_b1,
            &mut self.enc_w2,
            &mut self.enc_b2,
            &mut self.mem_wq,
            &mut self.mem_wk,
            &mut self.dec_w,
            &mut self.dec_b,
            &mut self.dec_w1,
            &mut self.dec_b1,
            &mut self.dec_w2,
            &mut self.dec_b2,
            &mut self.score_w1,
            &mut self.score_b1,
            &mut self.score_w2,
            &mut self.score_b2,
        ];
        let mut i = 0;
        t.map(|a| {
            i += 1;
            (PARAM_NAMES[i - 1], a)
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// Copy with every entry rounded to the nearest `f32`.
    pub fn rounded_to_f32(mut self) -> Self {
        for (_, t) in self.tensors_mut() {
            t.mapv_inplace(|v| v as f32 as f64);
        }
        self
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &DetectorParams, scale: f64) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.scaled_add(scale, b);
        }
    }
}

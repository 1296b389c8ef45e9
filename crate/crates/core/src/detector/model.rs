use ndarray::{concatenate, s, Array2, Axis};

use super::blocks::{
    affine, attention_backward, attention_forward, feedforward_backward, feedforward_forward, mean_rows,
    mean_rows_backward, softmax_backward, sum_rows, AttentionCache, FeedForwardCache,
};
use super::features::pair_inputs;
use super::memory::{attend, write_scale, MemoryRead, MemoryState};
use super::params::DetectorParams;
use super::DetectorError;
use crate::geometry::ImageFrame;
use crate::io::{Label, PairRecord, VideoData, VideoEntry};

/// Logits are clipped to this magnitude before the logistic squash.
pub const LOGIT_CLIP: f64 = 30.0;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderFeatures {
    /// `N x D`, one row per patch.
    pub tokens: Array2<f64>,
    pub valid: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderFeatures {
    pub tokens: Array2<f64>,
}

/// Per-frame scores of one video and the decision derived from their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTrace {
    /// `frame_scores[t - 1]` is the score of pair `t`.
    pub frame_scores: Vec<f64>,
    pub video_score: f64,
    pub threshold: f64,
    pub label: Label,
}

impl ScoreTrace {
    pub fn from_scores(frame_scores: Vec<f64>, threshold: f64) -> Result<Self, DetectorError> {
        if frame_scores.is_empty() {
            return Err(DetectorError::EmptyVideo);
        }
        if let Some(bad) = frame_scores.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
            return Err(DetectorError::ScoreRange(*bad));
        }
        if !threshold.is_finite() {
            return Err(DetectorError::Threshold(threshold));
        }
        let video_score = frame_scores.iter().sum::<f64>() / frame_scores.len() as f64;
        let label = if video_score > threshold { Label::Fake } else { Label::Real };
        Ok(Self { frame_scores, video_score, threshold, label })
    }
}

fn encode_patches(patches: &Array2<f64>, valid: Vec<bool>, params: &DetectorParams) -> EncoderFeatures {
    EncoderFeatures { tokens: encode_cached(patches, params).0, valid }
}

fn encode_cached(patches: &Array2<f64>, params: &DetectorParams) -> (Array2<f64>, AttentionCache, FeedForwardCache) {
    let x = affine(patches, &params.patch_w, &params.patch_b);
    let (a, attn) = attention_forward(&x, &params.enc_wq, &params.enc_wk, &params.enc_wv);
    let (fe, ffn) = feedforward_forward(&a, &params.enc_w1, &params.enc_b1, &params.enc_w2, &params.enc_b2);
    (fe, attn, ffn)
}

/// Encodes frame `t` and frame `t - 1` of one pair record.
pub fn encode_pair(
    frame_t: &ImageFrame,
    frame_prev: &ImageFrame,
    pair: &PairRecord,
    params: &DetectorParams,
) -> Result<(EncoderFeatures, EncoderFeatures), DetectorError> {
    let inputs = pair_inputs(frame_t, frame_prev, pair, &params.config)?;
    Ok((
        encode_patches(&inputs.current, inputs.current_valid, params),
        encode_patches(&inputs.previous, inputs.previous_valid, params),
    ))
}

/// Attention read of the memory with queries `f_e W_q`.
pub fn memory_read(fe: &EncoderFeatures, memory: &MemoryState, params: &DetectorParams) -> Array2<f64> {
    attend(&fe.tokens.dot(&params.mem_wq), memory).output
}

fn check_tokens(what: &'static str, m: &Array2<f64>, params: &DetectorParams) -> Result<(), DetectorError> {
    if m.ncols() != params.config.dim || m.nrows() == 0 {
        return Err(DetectorError::Shape { what, rows: m.nrows(), cols: m.ncols(), dim: params.config.dim });
    }
    Ok(())
}

pub fn decode(fe: &EncoderFeatures, fc: &Array2<f64>, params: &DetectorParams) -> Result<DecoderFeatures, DetectorError> {
    check_tokens("encoder features", &fe.tokens, params)?;
    check_tokens("memory read", fc, params)?;
    if fc.nrows() != fe.tokens.nrows() {
        return Err(DetectorError::Shape { what: "memory read", rows: fc.nrows(), cols: fc.ncols(), dim: params.config.dim });
    }
    let cat = concatenate![Axis(1), fe.tokens, *fc];
    let z = affine(&cat, &params.dec_w, &params.dec_b);
    let (fd, _) = feedforward_forward(&z, &params.dec_w1, &params.dec_b1, &params.dec_w2, &params.dec_b2);
    Ok(DecoderFeatures { tokens: fd })
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn scorer(pooled: &Array2<f64>, params: &DetectorParams) -> (Array2<f64>, f64) {
    let h = affine(pooled, &params.score_w1, &params.score_b1).mapv(f64::tanh);
    let logit = affine(&h, &params.score_w2, &params.score_b2)[[0, 0]];
    (h, logit)
}

/// Mean-pools the tokens and maps them to a score in `(0, 1)`.
pub fn score(fd: &DecoderFeatures, params: &DetectorParams) -> f64 {
    let (_, logit) = scorer(&mean_rows(&fd.tokens), params);
    logistic(logit.clamp(-LOGIT_CLIP, LOGIT_CLIP))
}

/// Writes key `mean(f_e) W_k` and value `mean(f_d) (1 - |2s - 1|)` at the cursor.
pub fn memory_update(
    fd: &DecoderFeatures,
    s: f64,
    fe: &EncoderFeatures,
    memory: &MemoryState,
    params: &DetectorParams,
) -> MemoryState {
    let mut next = memory.clone();
    let key = mean_rows(&fe.tokens).dot(&params.mem_wk);
    let value = mean_rows(&fd.tokens) * write_scale(s);
    next.write(key.as_slice().expect("contiguous"), value.as_slice().expect("contiguous"));
    next
}

/// Scores every consecutive pair of `video` in time order and averages.
pub fn detect_video(video: &VideoData, params: &DetectorParams, threshold: f64) -> Result<ScoreTrace, DetectorError> {
    let mut memory = MemoryState::empty(params.config.memory_capacity, params.config.dim);
    let mut scores = Vec::with_capacity(video.pairs.len());
    for t in 1..video.frames.len() {
        let pair = video.pairs.get(t - 1).ok_or(DetectorError::MissingPair { t })?;
        let (fe, _prev) = encode_pair(&video.frames[t], &video.frames[t - 1], pair, params)?;
        let fc = memory_read(&fe, &memory, params);
        let fd = decode(&fe, &fc, params)?;
        let s = score(&fd, params);
        memory = memory_update(&fd, s, &fe, &memory, params);
        scores.push(s);
    }
    ScoreTrace::from_scores(scores, threshold)
}

/// Loads a video directory and runs [`detect_video`] on it.
pub fn detect_entry(entry: &VideoEntry, params: &DetectorParams, threshold: f64) -> Result<ScoreTrace, DetectorError> {
    detect_video(&entry.load()?, params, threshold)
}

/// Precomputed frame-`t` patch inputs of one video, the only part of the
/// encoder input that has a gradient path to the loss.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoInputs {
    pub steps: Vec<Array2<f64>>,
}

impl VideoInputs {
    pub fn from_video(video: &VideoData, params: &DetectorParams) -> Result<Self, DetectorError> {
        let steps = (1..video.frames.len())
            .map(|t| {
                let pair = video.pairs.get(t - 1).ok_or(DetectorError::MissingPair { t })?;
                Ok(pair_inputs(&video.frames[t], &video.frames[t - 1], pair, &params.config)?.current)
            })
            .collect::<Result<Vec<_>, DetectorError>>()?;
        if steps.is_empty() {
            return Err(DetectorError::EmptyVideo);
        }
        Ok(Self { steps })
    }
}

struct StepCache {
    attn: AttentionCache,
    enc_ffn: FeedForwardCache,
    fe: Array2<f64>,
    q: Array2<f64>,
    read: MemoryRead,
    values: Array2<f64>,
    keys: Array2<f64>,
    sources: Vec<usize>,
    cat: Array2<f64>,
    dec_ffn: FeedForwardCache,
    fd_mean: Array2<f64>,
    fe_mean: Array2<f64>,
    h: Array2<f64>,
    logit: f64,
    s: f64,
}

/// Forward pass keeping everything the backward pass needs.
fn forward_cached(inputs: &VideoInputs, params: &DetectorParams) -> (Vec<f64>, Vec<StepCache>) {
    let d = params.config.dim;
    let mut memory = MemoryState::empty(params.config.memory_capacity, d);
    let mut scores = Vec::with_capacity(inputs.steps.len());
    let mut caches = Vec::with_capacity(inputs.steps.len());
    for (i, patches) in inputs.steps.iter().enumerate() {
        let (fe, attn, enc_ffn) = encode_cached(patches, params);
        let q = fe.dot(&params.mem_wq);
        let read = attend(&q, &memory);
        let keys = memory.keys.select(Axis(0), &read.slots);
        let values = memory.values.select(Axis(0), &read.slots);
        let sources = read.slots.iter().map(|&j| memory.sources[j].expect("occupied slot has a source")).collect();
        let cat = concatenate![Axis(1), fe, read.output];
        let z = affine(&cat, &params.dec_w, &params.dec_b);
        let (fd, dec_ffn) = feedforward_forward(&z, &params.dec_w1, &params.dec_b1, &params.dec_w2, &params.dec_b2);
        let fd_mean = mean_rows(&fd);
        let fe_mean = mean_rows(&fe);
        let (h, logit) = scorer(&fd_mean, params);
        let s = logistic(logit.clamp(-LOGIT_CLIP, LOGIT_CLIP));
        let key = fe_mean.dot(&params.mem_wk);
        let value = &fd_mean * write_scale(s);
        memory.write_tagged(key.as_slice().expect("contiguous"), value.as_slice().expect("contiguous"), Some(i));
        scores.push(s);
        caches.push(StepCache { attn, enc_ffn, fe, q, read, values, keys, sources, cat, dec_ffn, fd_mean, fe_mean, h, logit, s });
    }
    (scores, caches)
}

/// Per-step scores of the precomputed inputs; identical to [`detect_video`].
pub fn forward_scores(inputs: &VideoInputs, params: &DetectorParams) -> Vec<f64> {
    forward_cached(inputs, params).0
}

pub fn video_score(scores: &[f64]) -> f64 {
    scores.iter().sum::<f64>() / scores.len() as f64
}

/// Binary cross-entropy of a video score against its label (fake = 1).
pub fn bce(score: f64, label: Label) -> f64 {
    if label.is_fake() {
        -score.ln()
    } else {
        -(1.0 - score).ln()
    }
}

/// Loss of one video and its gradient, accumulated into `grads` with weight
/// `weight`. Backpropagates through time, including through memory slots.
pub fn accumulate_gradient(
    inputs: &VideoInputs,
    label: Label,
    params: &DetectorParams,
    weight: f64,
    grads: &mut DetectorParams,
) -> f64 {
    let (scores, caches) = forward_cached(inputs, params);
    let n_steps = scores.len();
    let sv = video_score(&scores);
    let loss = bce(sv, label);
    let y = if label.is_fake() { 1.0 } else { 0.0 };
    let d_sv = weight * (sv - y) / (sv * (1.0 - sv));
    let d = params.config.dim;

    let mut d_keys = vec![Array2::<f64>::zeros((1, d)); n_steps];
    let mut d_values = vec![Array2::<f64>::zeros((1, d)); n_steps];

    for i in (0..n_steps).rev() {
        let c = &caches[i];
        let patches = &inputs.steps[i];
        let n_tokens = c.fe.nrows();

        // memory write: value = fd_mean * g(s), key = fe_mean * W_k
        let g = write_scale(c.s);
        let dg = if c.s > 0.5 {
            -2.0
        } else if c.s < 0.5 {
            2.0
        } else {
            0.0
        };
        let mut d_fd_mean = &d_values[i] * g;
        let mut ds = d_sv / n_steps as f64 + (&d_values[i] * &c.fd_mean).sum() * dg;
        grads.mem_wk += &c.fe_mean.t().dot(&d_keys[i]);
        let d_fe_mean = d_keys[i].dot(&params.mem_wk.t());

        // scorer
        if c.logit.abs() >= LOGIT_CLIP {
            ds = 0.0;
        }
        let d_logit = ds * c.s * (1.0 - c.s);
        let d_logit = Array2::from_elem((1, 1), d_logit);
        grads.score_w2 += &c.h.t().dot(&d_logit);
        grads.score_b2 += &d_logit;
        let d_pre = d_logit.dot(&params.score_w2.t()) * c.h.mapv(|h| 1.0 - h * h);
        grads.score_w1 += &c.fd_mean.t().dot(&d_pre);
        grads.score_b1 += &d_pre;
        d_fd_mean += &d_pre.dot(&params.score_w1.t());

        // decoder
        let d_fd = mean_rows_backward(&d_fd_mean, n_tokens);
        let d_z = feedforward_backward(
            &c.dec_ffn,
            &params.dec_w1,
            &params.dec_w2,
            &d_fd,
            [&mut grads.dec_w1, &mut grads.dec_b1, &mut grads.dec_w2, &mut grads.dec_b2],
        );
        grads.dec_w += &c.cat.t().dot(&d_z);
        grads.dec_b += &sum_rows(&d_z);
        let d_cat = d_z.dot(&params.dec_w.t());
        let mut d_fe = d_cat.slice(s![.., ..d]).to_owned();
        let d_fc = d_cat.slice(s![.., d..]).to_owned();

        // memory read
        if !c.read.slots.is_empty() {
            let scale = 1.0 / (d as f64).sqrt();
            let d_att = d_fc.dot(&c.values.t());
            let d_vals = c.read.attention.t().dot(&d_fc);
            let d_scores = softmax_backward(&c.read.attention, &d_att) * scale;
            let d_q = d_scores.dot(&c.keys);
            let d_ks = d_scores.t().dot(&c.q);
            for (j, &src) in c.sources.iter().enumerate() {
                d_keys[src] += &d_ks.slice(s![j..j + 1, ..]);
                d_values[src] += &d_vals.slice(s![j..j + 1, ..]);
            }
            grads.mem_wq += &c.fe.t().dot(&d_q);
            d_fe += &d_q.dot(&params.mem_wq.t());
        }
        d_fe += &mean_rows_backward(&d_fe_mean, n_tokens);

        // encoder
        let d_a = feedforward_backward(
            &c.enc_ffn,
            &params.enc_w1,
            &params.enc_w2,
            &d_fe,
            [&mut grads.enc_w1, &mut grads.enc_b1, &mut grads.enc_w2, &mut grads.enc_b2],
        );
        let d_x = attention_backward(
            &c.attn,
            &params.enc_wq,
            &params.enc_wk,
            &params.enc_wv,
            &d_a,
            [&mut grads.enc_wq, &mut grads.enc_wk, &mut grads.enc_wv],
        );
        grads.patch_w += &patches.t().dot(&d_x);
        grads.patch_b += &sum_rows(&d_x);
    }
    loss
}

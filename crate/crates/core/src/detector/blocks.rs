//! Differentiable building blocks with explicit forward caches and backward passes.

use ndarray::{Array2, Axis};

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(scores: &Array2<f64>) -> Array2<f64> {
    let mut out = scores.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Gradient through a row-wise softmax: `ds = a * (da - rowsum(da * a))`.
pub fn softmax_backward(a: &Array2<f64>, da: &Array2<f64>) -> Array2<f64> {
    let dot = (da * a).sum_axis(Axis(1)).insert_axis(Axis(1));
    a * &(da - &dot)
}

pub fn mean_rows(x: &Array2<f64>) -> Array2<f64> {
    x.mean_axis(Axis(0)).expect("non-empty").insert_axis(Axis(0))
}

pub fn sum_rows(x: &Array2<f64>) -> Array2<f64> {
    x.sum_axis(Axis(0)).insert_axis(Axis(0))
}

/// Spreads a `1 x d` gradient of a row mean back over `n` rows.
pub fn mean_rows_backward(d: &Array2<f64>, n: usize) -> Array2<f64> {
    let row = d / n as f64;
    row.broadcast((n, d.ncols())).expect("row vector").to_owned()
}

/// `x @ w + b` with `b` broadcast over rows.
pub fn affine(x: &Array2<f64>, w: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    x.dot(w) + b
}

/// Residual self-attention over tokens: `y = x + softmax(q k^T / sqrt(d)) v`.
#[derive(Debug, Clone)]
pub struct AttentionCache {
    x: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    a: Array2<f64>,
}

pub fn attention_forward(
    x: &Array2<f64>,
    wq: &Array2<f64>,
    wk: &Array2<f64>,
    wv: &Array2<f64>,
) -> (Array2<f64>, AttentionCache) {
    let scale = 1.0 / (wq.ncols() as f64).sqrt();
    let q = x.dot(wq);
    let k = x.dot(wk);
    let v = x.dot(wv);
    let a = softmax_rows(&(q.dot(&k.t()) * scale));
    let y = x + &a.dot(&v);
    (y, AttentionCache { x: x.clone(), q, k, v, a })
}

/// Accumulates weight gradients into `grads` and returns `dL/dx`.
pub fn attention_backward(
    cache: &AttentionCache,
    wq: &Array2<f64>,
    wk: &Array2<f64>,
    wv: &Array2<f64>,
    dy: &Array2<f64>,
    grads: [&mut Array2<f64>; 3],
) -> Array2<f64> {
    let scale = 1.0 / (wq.ncols() as f64).sqrt();
    let da = dy.dot(&cache.v.t());
    let dv = cache.a.t().dot(dy);
    let ds = softmax_backward(&cache.a, &da) * scale;
    let dq = ds.dot(&cache.k);
    let dk = ds.t().dot(&cache.q);
    let [gq, gk, gv] = grads;
    *gq += &cache.x.t().dot(&dq);
    *gk += &cache.x.t().dot(&dk);
    *gv += &cache.x.t().dot(&dv);
    dy + &dq.dot(&wq.t()) + dk.dot(&wk.t()) + dv.dot(&wv.t())
}

/// Residual two-layer feedforward: `y = x + tanh(x w1 + b1) w2 + b2`.
#[derive(Debug, Clone)]
pub struct FeedForwardCache {
    x: Array2<f64>,
    h: Array2<f64>,
}

pub fn feedforward_forward(
    x: &Array2<f64>,
    w1: &Array2<f64>,
    b1: &Array2<f64>,
    w2: &Array2<f64>,
    b2: &Array2<f64>,
) -> (Array2<f64>, FeedForwardCache) {
    let h = affine(x, w1, b1).mapv(f64::tanh);
    let y = x + &affine(&h, w2, b2);
    (y, FeedForwardCache { x: x.clone(), h })
}

pub fn feedforward_backward(
    cache: &FeedForwardCache,
    w1: &Array2<f64>,
    w2: &Array2<f64>,
    dy: &Array2<f64>,
    grads: [&mut Array2<f64>; 4],
) -> Array2<f64> {
    let [gw1, gb1, gw2, gb2] = grads;
    *gw2 += &cache.h.t().dot(dy);
    *gb2 += &sum_rows(dy);
    let dz = dy.dot(&w2.t()) * cache.h.mapv(|h| 1.0 - h * h);
    *gw1 += &cache.x.t().dot(&dz);
    *gb1 += &sum_rows(&dz);
    dy + &dz.dot(&w1.t())
}

use super::{ConfidenceMap, GeometryError, ImageFrame, WarpResult};

/// Per-pixel mean absolute RGB difference between a reference frame and a warp.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMap {
    pub height: usize,
    pub width: usize,
    /// Residual in `[0, 1]`; zero where `validity` is false.
    pub values: Vec<f64>,
    pub validity: Vec<bool>,
}

impl ResidualMap {
    pub fn valid_count(&self) -> usize {
        self.validity.iter().filter(|v| **v).count()
    }
}

pub fn residual_map(reference: &ImageFrame, warp: &WarpResult) -> Result<ResidualMap, GeometryError> {
    let (height, width) = reference.dims();
    if warp.warped.dims() != (height, width) {
        return Err(GeometryError::DimensionMismatch {
            what: "warped frame",
            expected: (height, width),
            found: warp.warped.dims(),
        });
    }
    let a = reference.data();
    let b = warp.warped.data();
    let values = warp
        .validity
        .iter()
        .enumerate()
        .map(|(i, &ok)| {
            if !ok {
                return 0.0;
            }
            let j = i * 3;
            ((a[j] - b[j]).abs() + (a[j + 1] - b[j + 1]).abs() + (a[j + 2] - b[j + 2]).abs()) / 3.0
        })
        .collect();
    Ok(ResidualMap { height, width, values, validity: warp.validity.clone() })
}

/// Summary of a residual map over its valid pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualStats {
    pub mean: f64,
    /// Mean weighted by the reference confidence. Falls back to `mean` when
    /// every valid pixel has zero confidence.
    pub weighted_mean: f64,
    pub valid_fraction: f64,
    /// Mean squared difference between the residual and its 3x3 box blur.
    pub high_freq_energy: f64,
}

/// Statistics over valid pixels. The box blur averages the valid pixels of each
/// clipped 3x3 neighborhood.
pub fn residual_statistics(
    residual: &ResidualMap,
    confidence: &ConfidenceMap,
) -> Result<ResidualStats, GeometryError> {
    let (h, w) = (residual.height, residual.width);
    if confidence.dims() != (h, w) {
        return Err(GeometryError::DimensionMismatch {
            what: "confidence map",
            expected: (h, w),
            found: confidence.dims(),
        });
    }
    let valid_count = residual.valid_count();
    if valid_count == 0 {
        return Err(GeometryError::NoOverlap);
    }

    // summed-area tables of masked values and of the mask
    let stride = w + 1;
    let mut sum = vec![0.0; (h + 1) * stride];
    let mut cnt = vec![0.0; (h + 1) * stride];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let (v, m) = if residual.validity[i] { (residual.values[i], 1.0) } else { (0.0, 0.0) };
            let k = (r + 1) * stride + c + 1;
            sum[k] = v + sum[k - 1] + sum[k - stride] - sum[k - stride - 1];
            cnt[k] = m + cnt[k - 1] + cnt[k - stride] - cnt[k - stride - 1];
        }
    }
    let window = |table: &[f64], r0: usize, c0: usize, r1: usize, c1: usize| {
        table[r1 * stride + c1] - table[r0 * stride + c1] - table[r1 * stride + c0] + table[r0 * stride + c0]
    };

    let (mut total, mut wtotal, mut wsum, mut hf) = (0.0, 0.0, 0.0, 0.0);
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if !residual.validity[i] {
                continue;
            }
            let v = residual.values[i];
            let cf = confidence.values()[i];
            total += v;
            wtotal += cf * v;
            wsum += cf;
            let (r0, c0) = (r.saturating_sub(1), c.saturating_sub(1));
            let (r1, c1) = ((r + 2).min(h), (c + 2).min(w));
            let blur = window(&sum, r0, c0, r1, c1) / window(&cnt, r0, c0, r1, c1);
            hf += (v - blur) * (v - blur);
        }
    }
    let n = valid_count as f64;
    let mean = total / n;
    Ok(ResidualStats {
        mean,
        weighted_mean: if wsum > 0.0 { wtotal / wsum } else { mean },
        valid_fraction: n / (h * w) as f64,
        high_freq_energy: hf / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(h: usize, w: usize, f: impl Fn(usize, usize) -> Option<f64>) -> ResidualMap {
        let mut values = vec![];
        let mut validity = vec![];
        for i in 0..h * w {
            match f(i / w, i % w) {
                Some(v) => {
                    values.push(v);
                    validity.push(true);
                }
                None => {
                    values.push(0.0);
                    validity.push(false);
                }
            }
        }
        ResidualMap { height: h, width: w, values, validity }
    }

    /// Direct per-pixel statistics, no summed-area tables.
    fn brute(res: &ResidualMap, conf: &ConfidenceMap) -> ResidualStats {
        let (h, w) = (res.height, res.width);
        let mut vals = vec![];
        let (mut ws, mut wv) = (0.0, 0.0);
        let mut hf = 0.0;
        for r in 0..h as i64 {
            for c in 0..w as i64 {
                let i = (r * w as i64 + c) as usize;
                if !res.validity[i] {
                    continue;
                }
                vals.push(res.values[i]);
                ws += conf.values()[i];
                wv += conf.values()[i] * res.values[i];
                let mut acc = vec![];
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (rr, cc) = (r + dr, c + dc);
                        if rr < 0 || cc < 0 || rr >= h as i64 || cc >= w as i64 {
                            continue;
                        }
                        let j = (rr * w as i64 + cc) as usize;
                        if res.validity[j] {
                            acc.push(res.values[j]);
                        }
                    }
                }
                let blur = acc.iter().sum::<f64>() / acc.len() as f64;
                hf += (res.values[i] - blur).powi(2);
            }
        }
        let n = vals.len() as f64;
        ResidualStats {
            mean: vals.iter().sum::<f64>() / n,
            weighted_mean: wv / ws,
            valid_fraction: n / (h * w) as f64,
            high_freq_energy: hf / n,
        }
    }

    #[test]
    fn identity_warp_has_zero_residual() {
        let f = ImageFrame::filled(8, 8, [0.3, 0.6, 0.9]).unwrap();
        let warp = WarpResult { warped: f.clone(), validity: vec![true; 64], depth: vec![1.0; 64] };
        let r = residual_map(&f, &warp).unwrap();
        assert!(r.values.iter().all(|v| *v == 0.0));
        let s = residual_statistics(&r, &ConfidenceMap::uniform(8, 8, 0.7).unwrap()).unwrap();
        assert_eq!((s.mean, s.weighted_mean, s.high_freq_energy), (0.0, 0.0, 0.0));
        assert_eq!(s.valid_fraction, 1.0);
    }

    #[test]
    fn opposite_frames_give_unit_residual() {
        let one = ImageFrame::filled(8, 8, [1.0; 3]).unwrap();
        let zero = ImageFrame::filled(8, 8, [0.0; 3]).unwrap();
        let warp = WarpResult { warped: zero, validity: vec![true; 64], depth: vec![1.0; 64] };
        let r = residual_map(&one, &warp).unwrap();
        assert!(r.values.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn residual_rejects_dim_mismatch() {
        let a = ImageFrame::filled(8, 8, [1.0; 3]).unwrap();
        let b = ImageFrame::filled(8, 9, [1.0; 3]).unwrap();
        let warp = WarpResult { warped: b, validity: vec![true; 72], depth: vec![1.0; 72] };
        assert!(residual_map(&a, &warp).is_err());
    }

    #[test]
    fn constant_field_has_no_high_frequency_energy() {
        let r = map(9, 11, |row, col| if (row + col) % 7 == 0 { None } else { Some(0.5) });
        let s = residual_statistics(&r, &ConfidenceMap::uniform(9, 11, 1.0).unwrap()).unwrap();
        assert!((s.mean - 0.5).abs() < 1e-15);
        assert!(s.high_freq_energy.abs() < 1e-15);
    }

    #[test]
    fn checkerboard_matches_direct_computation() {
        let r = map(10, 13, |row, col| {
            if row == 4 && col > 8 {
                None
            } else {
                Some(((row + col) % 2) as f64)
            }
        });
        let conf = ConfidenceMap::new(10, 13, (0..130).map(|i| (i % 5) as f64 * 0.25).collect()).unwrap();
        let got = residual_statistics(&r, &conf).unwrap();
        let want = brute(&r, &conf);
        assert!((got.mean - want.mean).abs() < 1e-12);
        assert!((got.weighted_mean - want.weighted_mean).abs() < 1e-12);
        assert!((got.valid_fraction - want.valid_fraction).abs() < 1e-12);
        assert!((got.high_freq_energy - want.high_freq_energy).abs() < 1e-12);
        assert!(got.high_freq_energy > 0.1);
    }

    #[test]
    fn no_overlap_is_an_error() {
        let r = map(8, 8, |_, _| None);
        assert_eq!(
            residual_statistics(&r, &ConfidenceMap::uniform(8, 8, 1.0).unwrap()),
            Err(GeometryError::NoOverlap)
        );
    }

    #[test]
    fn zero_confidence_falls_back_to_mean() {
        let r = map(8, 8, |row, _| Some(row as f64 / 8.0));
        let s = residual_statistics(&r, &ConfidenceMap::uniform(8, 8, 0.0).unwrap()).unwrap();
        assert_eq!(s.weighted_mean, s.mean);
    }
}

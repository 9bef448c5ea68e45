//! Motion onset/offset detection from per-frame movable-part and robot masks.
//!
//! Each pair of consecutive frames is reduced to a motion score: the robot
//! mask of the *other* frame is removed from each movable mask, and the score
//! is the fraction of the earlier processed mask that does not survive into
//! the later one. The series is smoothed with a Savitzky–Golay filter and
//! thresholded at `B + 3 sigma`, where `B` is the 20th percentile of the
//! smoothed scores and `sigma` is the spread of the raw scores on the quiet
//! frames (smoothed score at or below `B`).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskFrame {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl MaskFrame {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::Input(format!(
                "mask has {} pixels, expected {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    fn check_dims(&self, other: &MaskFrame) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// `self AND NOT other`.
    pub fn minus(&self, other: &MaskFrame) -> Result<MaskFrame> {
        self.check_dims(other)?;
        Ok(MaskFrame {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a && !b)
                .collect(),
        })
    }
}

/// Movable-part and robot masks for every frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSequence {
    pub frames: Vec<(MaskFrame, MaskFrame)>,
}

impl MaskSequence {
    pub fn new(frames: Vec<(MaskFrame, MaskFrame)>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::Input(format!(
                "mask sequence needs at least 2 frames, got {}",
                frames.len()
            )));
        }
        let (w, h) = (frames[0].0.width, frames[0].0.height);
        for (m, r) in &frames {
            for f in [m, r] {
                if f.width != w || f.height != h {
                    return Err(Error::DimensionMismatch(w, h, f.width, f.height));
                }
            }
        }
        Ok(Self { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Removes each frame's robot occlusion from the other frame's movable mask.
pub fn subtract_masks(
    m_dyn_t: &MaskFrame,
    m_robot_t1: &MaskFrame,
    m_dyn_t1: &MaskFrame,
    m_robot_t: &MaskFrame,
) -> Result<(MaskFrame, MaskFrame)> {
    Ok((m_dyn_t.minus(m_robot_t1)?, m_dyn_t1.minus(m_robot_t)?))
}

/// Fraction of the pixels of `m_t` that are not set in `m_t1`.
pub fn motion_score(m_t: &MaskFrame, m_t1: &MaskFrame) -> Result<f64> {
    m_t.check_dims(m_t1)?;
    let mut total = 0usize;
    let mut changed = 0usize;
    for (&a, &b) in m_t.bits.iter().zip(&m_t1.bits) {
        if a {
            total += 1;
            if !b {
                changed += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptyMask(0));
    }
    Ok(changed as f64 / total as f64)
}

/// Least-squares weights that evaluate the fitted polynomial at the window centre.
pub fn savgol_coefficients(window: usize, order: usize) -> Result<Vec<f64>> {
    if window.is_multiple_of(2) || window == 0 {
        return Err(Error::BadFilterConfig(format!("window {window} must be odd")));
    }
    if order >= window {
        return Err(Error::BadFilterConfig(format!(
            "order {order} must be below window {window}"
        )));
    }
    let half = (window / 2) as f64;
    let a = DMatrix::from_fn(window, order + 1, |i, j| (i as f64 - half).powi(j as i32));
    let ata = a.transpose() * &a;
    let inv = ata
        .try_inverse()
        .ok_or_else(|| Error::BadFilterConfig("singular design matrix".into()))?;
    let pinv = inv * a.transpose();
    Ok(pinv.row(0).iter().copied().collect())
}

/// Savitzky–Golay smoothing with mirror padding (`x[-k] = x[k]`).
pub fn savgol_smooth(series: &[f64], window: usize, order: usize) -> Result<Vec<f64>> {
    let coeffs = savgol_coefficients(window, order)?;
    let n = series.len();
    if n < window {
        return Err(Error::BadFilterConfig(format!(
            "series of length {n} is shorter than window {window}"
        )));
    }
    let half = (window / 2) as isize;
    let last = n as isize - 1;
    let at = |i: isize| -> f64 {
        let j = if i < 0 {
            -i
        } else if i > last {
            2 * last - i
        } else {
            i
        };
        series[j as usize]
    };
    Ok((0..n as isize)
        .map(|i| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * at(i + k as isize - half))
                .sum()
        })
        .collect())
}

/// Type-7 (linear interpolation) quantile.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 || values.iter().all(|v| *v == values[0]) {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    var.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub baseline: f64,
    pub sigma_noise: f64,
    pub mu: f64,
}

/// Baseline quantile of the smoothed scores.
pub const BASELINE_QUANTILE: f64 = 0.2;

/// `B` is the 20th percentile of `smoothed`; `sigma` is the sample standard
/// deviation over the quiet frames (`smoothed <= B`) of `noise`, which is
/// normally the raw score series. Passing `None` measures the spread of the
/// smoothed series itself.
pub fn dynamic_threshold(smoothed: &[f64], noise: Option<&[f64]>) -> Result<Threshold> {
    if smoothed.len() < 5 {
        return Err(Error::Input(format!(
            "threshold needs at least 5 scores, got {}",
            smoothed.len()
        )));
    }
    let noise = noise.unwrap_or(smoothed);
    if noise.len() != smoothed.len() {
        return Err(Error::Input("noise series length differs".into()));
    }
    let baseline = quantile(smoothed, BASELINE_QUANTILE);
    let quiet: Vec<f64> = smoothed
        .iter()
        .zip(noise)
        .filter(|(s, _)| **s <= baseline)
        .map(|(_, n)| *n)
        .collect();
    let sigma_noise = sample_std(&quiet);
    Ok(Threshold {
        baseline,
        sigma_noise,
        mu: baseline + 3.0 * sigma_noise,
    })
}

/// First and last index whose score exceeds `mu`.
pub fn extract_keyframes(smoothed: &[f64], mu: f64) -> Result<(usize, usize)> {
    let start = smoothed.iter().position(|&s| s > mu);
    let end = smoothed.iter().rposition(|&s| s > mu);
    match (start, end) {
        (Some(s), Some(e)) => Ok((s, e)),
        _ => Err(Error::NoMotionDetected(mu)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyframeConfig {
    pub window: usize,
    pub order: usize,
}

impl Default for KeyframeConfig {
    fn default() -> Self {
        Self {
            window: 5,
            order: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionScoreSeries {
    pub raw: Vec<f64>,
    pub smoothed: Vec<f64>,
    #[serde(rename = "baseline_B")]
    pub baseline: f64,
    pub sigma_noise: f64,
    #[serde(rename = "threshold_mu")]
    pub threshold: f64,
    pub labels: Vec<bool>,
    pub start_frame: usize,
    pub end_frame: usize,
}

/// Raw score for every consecutive frame pair. Fully occluded frames reuse
/// the previous score; leading occluded frames take the first valid one.
pub fn raw_scores(seq: &MaskSequence) -> Result<Vec<f64>> {
    let pair = |t: usize| -> Result<Option<f64>> {
        let (dyn_t, rob_t) = &seq.frames[t];
        let (dyn_t1, rob_t1) = &seq.frames[t + 1];
        let (m_t, m_t1) = subtract_masks(dyn_t, rob_t1, dyn_t1, rob_t)?;
        match motion_score(&m_t, &m_t1) {
            Ok(s) => Ok(Some(s)),
            Err(Error::EmptyMask(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let n = seq.len() - 1;
    #[cfg(feature = "parallel")]
    let scores: Vec<Option<f64>> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(pair).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let scores: Vec<Option<f64>> = (0..n).map(pair).collect::<Result<_>>()?;

    let first = scores
        .iter()
        .flatten()
        .next()
        .copied()
        .ok_or(Error::EmptyMask(0))?;
    let mut prev = first;
    Ok(scores
        .into_iter()
        .map(|s| {
            let v = s.unwrap_or(prev);
            prev = v;
            v
        })
        .collect())
}

impl MotionScoreSeries {
    pub fn from_raw(raw: Vec<f64>, cfg: &KeyframeConfig) -> Result<Self> {
        let smoothed = savgol_smooth(&raw, cfg.window, cfg.order)?;
        let th = dynamic_threshold(&smoothed, Some(&raw))?;
        let (start_frame, end_frame) = extract_keyframes(&smoothed, th.mu)?;
        let labels = smoothed.iter().map(|&s| s > th.mu).collect();
        Ok(Self {
            raw,
            smoothed,
            baseline: th.baseline,
            sigma_noise: th.sigma_noise,
            threshold: th.mu,
            labels,
            start_frame,
            end_frame,
        })
    }

    pub fn from_masks(seq: &MaskSequence, cfg: &KeyframeConfig) -> Result<Self> {
        Self::from_raw(raw_scores(seq)?, cfg)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,raw,smoothed,threshold,motion\n");
        for (t, (r, s)) in self.raw.iter().zip(&self.smoothed).enumerate() {
            out.push_str(&format!(
                "{t},{r},{s},{},{}\n",
                self.threshold,
                u8::from(self.labels[t])
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn columns(w: usize, h: usize, cols: std::ops::RangeInclusive<usize>) -> MaskFrame {
        let mut m = MaskFrame::empty(w, h);
        for y in 0..h {
            for x in cols.clone() {
                m.set(x, y, true);
            }
        }
        m
    }

    #[test]
    fn subtraction_cases() {
        let dyn_t = columns(10, 10, 0..=4);
        let dyn_t1 = columns(10, 10, 1..=5);
        let none = MaskFrame::empty(10, 10);
        let (a, b) = subtract_masks(&dyn_t, &none, &dyn_t1, &none).unwrap();
        assert_eq!((a, b), (dyn_t.clone(), dyn_t1.clone()));

        let (a, _) = subtract_masks(&dyn_t, &columns(10, 10, 0..=9), &dyn_t1, &none).unwrap();
        assert_eq!(a.count(), 0);

        let (a, _) = subtract_masks(&dyn_t, &columns(10, 10, 4..=4), &dyn_t1, &none).unwrap();
        assert_eq!(a, columns(10, 10, 0..=3));
        assert_eq!(a.count(), 40);

        assert!(matches!(
            subtract_masks(&dyn_t, &MaskFrame::empty(9, 10), &dyn_t1, &none),
            Err(Error::DimensionMismatch(..))
        ));
    }

    #[test]
    fn score_cases() {
        let m = columns(10, 10, 0..=4);
        assert_eq!(motion_score(&m, &m).unwrap(), 0.0);
        assert_eq!(motion_score(&m, &MaskFrame::empty(10, 10)).unwrap(), 1.0);
        let shifted = columns(10, 10, 1..=5);
        assert!((motion_score(&m, &shifted).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(
            motion_score(&MaskFrame::empty(10, 10), &m),
            Err(Error::EmptyMask(_))
        ));
    }

    #[test]
    fn five_point_quadratic_weights() {
        // Normal equations of the 5-point quadratic fit give [-3, 12, 17, 12, -3] / 35.
        let c = savgol_coefficients(5, 2).unwrap();
        let expected = [-3.0, 12.0, 17.0, 12.0, -3.0].map(|v| v / 35.0);
        for (a, b) in c.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let s = savgol_smooth(&[0.0, 0.0, 1.0, 0.0, 0.0], 5, 2).unwrap();
        assert!((s[2] - 17.0 / 35.0).abs() < 1e-12);
    }

    #[test]
    fn smoothing_keeps_constants_and_quadratics() {
        let c = vec![0.3; 20];
        for v in savgol_smooth(&c, 11, 3).unwrap() {
            assert!((v - 0.3).abs() < 1e-12);
        }
        let sq: Vec<f64> = (0..30).map(|t| (t * t) as f64).collect();
        let s = savgol_smooth(&sq, 7, 2).unwrap();
        for t in 3..27 {
            assert!((s[t] - sq[t]).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_filter_configs() {
        assert!(matches!(savgol_smooth(&[0.0; 10], 4, 2), Err(Error::BadFilterConfig(_))));
        assert!(matches!(savgol_smooth(&[0.0; 10], 5, 5), Err(Error::BadFilterConfig(_))));
        assert!(matches!(savgol_smooth(&[0.0; 3], 5, 2), Err(Error::BadFilterConfig(_))));
    }

    #[test]
    fn threshold_cases() {
        let th = dynamic_threshold(&[0.4; 8], None).unwrap();
        assert_eq!((th.baseline, th.sigma_noise, th.mu), (0.4, 0.0, 0.4));
        let s = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0];
        let th = dynamic_threshold(&s, None).unwrap();
        assert_eq!((th.baseline, th.sigma_noise, th.mu), (0.0, 0.0, 0.0));
        let th = dynamic_threshold(&s, Some(&s)).unwrap();
        assert_eq!(th.mu, 0.0);
    }

    #[test]
    fn quantile_interpolates() {
        // h = 0.2 * 4 = 0.8 -> 1 + 0.8 * (2 - 1)
        assert!((quantile(&[5.0, 1.0, 3.0, 2.0, 4.0], 0.2) - 1.8).abs() < 1e-12);
    }

    #[test]
    fn keyframe_cases() {
        assert_eq!(extract_keyframes(&[0.0, 0.0, 0.5, 0.5, 0.0], 0.1).unwrap(), (2, 3));
        assert!(matches!(
            extract_keyframes(&[0.0, 0.1, 0.05], 0.1),
            Err(Error::NoMotionDetected(_))
        ));
    }

    #[test]
    fn occluded_frames_reuse_previous_score() {
        let a = columns(10, 10, 0..=4);
        let b = columns(10, 10, 1..=5);
        let none = MaskFrame::empty(10, 10);
        let full = columns(10, 10, 0..=9);
        let seq = MaskSequence::new(vec![
            (a.clone(), none.clone()),
            (b.clone(), none.clone()),
            (b.clone(), none.clone()),
            (b.clone(), full.clone()),
        ])
        .unwrap();
        let raw = raw_scores(&seq).unwrap();
        assert_eq!(raw.len(), 3);
        assert!((raw[0] - 0.2).abs() < 1e-12);
        assert_eq!(raw[1], 0.0);
        // The robot covers everything at frame 3, so pair 2 has nothing to compare.
        assert_eq!(raw[2], raw[1]);
        let hidden = MaskSequence::new(vec![(a.clone(), none.clone()), (a, full)]).unwrap();
        assert!(matches!(raw_scores(&hidden), Err(Error::EmptyMask(_))));
    }
}

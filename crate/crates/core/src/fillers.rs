//! Filler-utterance detection ("uh", "um", "oh") from formant tracks.
//!
//! Formants come from a linear-prediction envelope: each voiced frame is
//! pre-emphasized and Hamming-windowed, an all-pole model of order
//! `2 + rate/1000` is fitted by Levinson-Durbin recursion, and the first two
//! envelope peaks above [`FORMANT_MIN_HZ`] are taken as F1 and F2.
//!
//! A filler is a maximal voiced segment that lasts at least
//! [`FILLER_MIN_MS`], sits in the back-vowel region on most of its frames,
//! and keeps its formants steady. A string of similar syllables spoken
//! without glottal stops satisfies the same description and is reported as
//! a filler too.

use std::f64::consts::PI;

use crate::error::Result;
use crate::features::FrameTrack;
use crate::framing::{AnalysisConfig, AudioWindow, FrameGrid};
use crate::pitch::PitchTrack;
use crate::vad::VadResult;

pub const PRE_EMPHASIS: f64 = 0.97;
pub const FORMANT_MIN_HZ: f64 = 150.0;
pub const ENVELOPE_MAX_HZ: f64 = 5000.0;
pub const ENVELOPE_STEP_HZ: f64 = 10.0;

pub const FILLER_MIN_MS: u32 = 250;
pub const BACK_VOWEL_F1_HZ: (f64, f64) = (300.0, 700.0);
pub const BACK_VOWEL_F2_HZ: (f64, f64) = (600.0, 1400.0);
/// Fraction of a segment's frames that must lie in the back-vowel region.
pub const BACK_VOWEL_OCCUPANCY: f64 = 0.8;
pub const MAX_F1_STD_HZ: f64 = 75.0;
pub const MAX_F2_STD_HZ: f64 = 100.0;

/// Per-frame (F1, F2) in Hz, `(0, 0)` on unvoiced frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FormantTrack {
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
}

impl FormantTrack {
    pub fn len(&self) -> usize {
        self.f1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f1.is_empty()
    }

    pub fn is_voiced(&self, i: usize) -> bool {
        self.f1[i] > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FillerResult {
    /// Half-open frame ranges of detected fillers.
    pub segments: Vec<(usize, usize)>,
    pub count_per_window: usize,
}

/// LPC coefficients `a[0..=order]` with `a[0] == 1`, from autocorrelation
/// by Levinson-Durbin. `None` when the frame has no energy.
pub fn lpc(frame: &[f64], order: usize) -> Option<Vec<f64>> {
    let r: Vec<f64> = (0..=order)
        .map(|k| frame[..frame.len().saturating_sub(k)].iter().zip(&frame[k..]).map(|(a, b)| a * b).sum())
        .collect();
    if r[0] <= 0.0 {
        return None;
    }
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    let mut prev = a.clone();
    for i in 1..=order {
        let acc: f64 = (1..i).map(|j| a[j] * r[i - j]).sum::<f64>() + r[i];
        let k = -acc / err;
        prev.copy_from_slice(&a);
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if err <= 0.0 {
            return None;
        }
    }
    Some(a)
}

/// Precomputed envelope evaluation grid for one sample rate and order.
struct EnvelopeGrid {
    freqs: Vec<f64>,
    /// `cos(w k)` and `sin(w k)` for each grid point, `order + 1` per row.
    cos: Vec<f64>,
    sin: Vec<f64>,
    order: usize,
    window: Vec<f64>,
}

impl EnvelopeGrid {
    fn new(rate: u32, span: usize) -> Self {
        let rate = f64::from(rate);
        let order = 2 + (rate / 1000.0) as usize;
        let top = ENVELOPE_MAX_HZ.min(rate / 2.0 - ENVELOPE_STEP_HZ);
        let freqs: Vec<f64> = (0..)
            .map(|i| f64::from(i) * ENVELOPE_STEP_HZ)
            .take_while(|&f| f <= top)
            .collect();
        let mut cos = Vec::with_capacity(freqs.len() * (order + 1));
        let mut sin = Vec::with_capacity(freqs.len() * (order + 1));
        for &f in &freqs {
            let w = 2.0 * PI * f / rate;
            for k in 0..=order {
                cos.push((w * k as f64).cos());
                sin.push((w * k as f64).sin());
            }
        }
        let window = (0..span)
            .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (span.max(2) - 1) as f64).cos())
            .collect();
        Self {
            freqs,
            cos,
            sin,
            order,
            window,
        }
    }

    /// Log power of the all-pole envelope at every grid frequency.
    fn log_envelope(&self, a: &[f64]) -> Vec<f64> {
        let m = self.order + 1;
        (0..self.freqs.len())
            .map(|g| {
                let row = g * m;
                let re: f64 = a.iter().zip(&self.cos[row..row + m]).map(|(c, x)| c * x).sum();
                let im: f64 = a.iter().zip(&self.sin[row..row + m]).map(|(c, x)| c * x).sum();
                -(re * re + im * im).max(1e-300).ln()
            })
            .collect()
    }

    fn formants(&self, frame: &[f64]) -> Option<(f64, f64)> {
        let mut prev = 0.0;
        let shaped: Vec<f64> = frame
            .iter()
            .zip(&self.window)
            .map(|(&s, w)| {
                let y = s - PRE_EMPHASIS * prev;
                prev = s;
                y * w
            })
            .collect();
        let a = lpc(&shaped, self.order)?;
        let env = self.log_envelope(&a);
        let mut peaks = (1..env.len().saturating_sub(1))
            .filter(|&g| env[g] > env[g - 1] && env[g] >= env[g + 1])
            .map(|g| {
                let (l, c, r) = (env[g - 1], env[g], env[g + 1]);
                let curv = l - 2.0 * c + r;
                let shift = if curv < 0.0 { 0.5 * (l - r) / curv } else { 0.0 };
                self.freqs[g] + shift * ENVELOPE_STEP_HZ
            })
            .filter(|&f| f >= FORMANT_MIN_HZ);
        let f1 = peaks.next()?;
        let f2 = peaks.next()?;
        Some((f1, f2))
    }
}

/// F1 and F2 of every frame that carries pitch.
pub fn formant_track(win: &AudioWindow, pitch: &PitchTrack, cfg: &AnalysisConfig) -> Result<FormantTrack> {
    let grid = FrameGrid::new(cfg, win.sample_rate);
    let count = grid.count(win.samples.len());
    if pitch.len() != count {
        return Err(crate::Error::GridMismatch {
            left: count,
            right: pitch.len(),
        });
    }
    let env = EnvelopeGrid::new(win.sample_rate, grid.span);
    let (f1, f2) = grid
        .frames(&win.samples)
        .zip(&pitch.values)
        .map(|(frame, &p)| if p > 0.0 { env.formants(frame).unwrap_or((0.0, 0.0)) } else { (0.0, 0.0) })
        .unzip();
    Ok(FormantTrack { f1, f2 })
}

fn in_band(v: f64, band: (f64, f64)) -> bool {
    band.0 <= v && v <= band.1
}

fn std_dev(v: &[f64]) -> f64 {
    crate::features::mean_std(v).map(|(_, s)| s).unwrap_or(0.0)
}

/// Whether the frames `[start, end)` form a filler.
pub fn is_filler_segment(formants: &FormantTrack, start: usize, end: usize, cfg: &AnalysisConfig) -> bool {
    let frames = end - start;
    if (frames as u64) * u64::from(cfg.frame_step_ms) < u64::from(FILLER_MIN_MS) {
        return false;
    }
    let f1 = &formants.f1[start..end];
    let f2 = &formants.f2[start..end];
    let back = f1
        .iter()
        .zip(f2)
        .filter(|(&a, &b)| in_band(a, BACK_VOWEL_F1_HZ) && in_band(b, BACK_VOWEL_F2_HZ))
        .count();
    back as f64 >= BACK_VOWEL_OCCUPANCY * frames as f64 && std_dev(f1) <= MAX_F1_STD_HZ && std_dev(f2) <= MAX_F2_STD_HZ
}

/// Maximal runs of frames that are both voice-active and formant-voiced.
pub fn voiced_segments(formants: &FormantTrack, vad: &FrameTrack) -> Vec<(usize, usize)> {
    let n = formants.len().min(vad.len());
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if !(formants.is_voiced(i) && vad.values[i] != 0.0) {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && formants.is_voiced(i) && vad.values[i] != 0.0 {
            i += 1;
        }
        out.push((start, i));
    }
    out
}

pub fn detect_fillers(formants: &FormantTrack, vad: &VadResult, cfg: &AnalysisConfig) -> Result<FillerResult> {
    if formants.len() != vad.flags.len() {
        return Err(crate::Error::GridMismatch {
            left: formants.len(),
            right: vad.flags.len(),
        });
    }
    let segments: Vec<(usize, usize)> = voiced_segments(formants, &vad.flags)
        .into_iter()
        .filter(|&(s, e)| is_filler_segment(formants, s, e, cfg))
        .collect();
    Ok(FillerResult {
        count_per_window: segments.len(),
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lpc_recovers_ar2_process() {
        // x[t] = 1.3 x[t-1] - 0.6 x[t-2] + e[t], driven by a deterministic
        // pseudo-random sequence.
        let mut state = 12345u64;
        let mut noise = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut x = vec![0.0; 20000];
        for t in 2..x.len() {
            x[t] = 1.3 * x[t - 1] - 0.6 * x[t - 2] + noise();
        }
        let a = lpc(&x, 2).unwrap();
        assert!((a[1] + 1.3).abs() < 0.02, "{a:?}");
        assert!((a[2] - 0.6).abs() < 0.02, "{a:?}");
    }

    #[test]
    fn lpc_of_silence_is_none() {
        assert!(lpc(&[0.0; 100], 10).is_none());
    }

    fn track(f1: Vec<f64>, f2: Vec<f64>) -> FormantTrack {
        FormantTrack { f1, f2 }
    }

    #[test]
    fn segment_predicates() {
        let cfg = AnalysisConfig::default();
        let steady = track(vec![500.0; 30], vec![1000.0; 30]);
        assert!(is_filler_segment(&steady, 0, 30, &cfg));
        assert!(!is_filler_segment(&steady, 0, 20, &cfg));
        let front = track(vec![400.0; 30], vec![2200.0; 30]);
        assert!(!is_filler_segment(&front, 0, 30, &cfg));
        let wobbly: Vec<f64> = (0..30).map(|i| if i % 2 == 0 { 350.0 } else { 650.0 }).collect();
        assert!(!is_filler_segment(&track(wobbly, vec![1000.0; 30]), 0, 30, &cfg));
    }

    #[test]
    fn segments_require_vad_and_formants() {
        let cfg = AnalysisConfig::default();
        let f = track(vec![0.0, 500.0, 500.0, 500.0, 0.0, 500.0], vec![0.0, 900.0, 900.0, 900.0, 0.0, 900.0]);
        let vad = FrameTrack::new(
            crate::features::TrackKind::VadFlag,
            vec![1.0, 1.0, 0.0, 1.0, 1.0, 1.0],
            &cfg,
        );
        assert_eq!(voiced_segments(&f, &vad), vec![(1, 2), (3, 4), (5, 6)]);
    }
}

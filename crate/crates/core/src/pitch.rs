//! Autocorrelation pitch tracking.
//!
//! Each frame is mean-removed and its normalized autocorrelation is scanned
//! from lag 2 up to the lag of the pitch floor. The earliest local maximum
//! whose correlation is within [`OCTAVE_TOLERANCE`] of the best one wins,
//! which keeps a periodic signal from locking onto a multiple of its true
//! period. The peak lag is refined by parabolic interpolation, converted to
//! Hz, and discarded when the frequency exceeds [`PITCH_CEILING_HZ`].
//!
//! Frames are then gated by loudness against an ambient-noise estimate
//! (the 10th percentile of the window's frame RMS), isolated voiced runs are
//! pruned, and finally [`gate_by_vad`] drops pitch far from detected voice.

use crate::error::{Error, Result};
use crate::features::{FrameTrack, TrackKind};
use crate::framing::{AnalysisConfig, AudioWindow, FrameGrid};

pub const PITCH_FLOOR_HZ: f64 = 75.0;
pub const PITCH_CEILING_HZ: f64 = 400.0;
/// Minimum normalized correlation for a frame to count as periodic.
pub const VOICING_THRESHOLD: f64 = 0.45;
/// A shorter-lag peak is preferred when it reaches this fraction of the best.
pub const OCTAVE_TOLERANCE: f64 = 0.9;
pub const SIGNAL_TO_NOISE: f64 = 4.0;
pub const AMBIENT_PERCENTILE: f64 = 10.0;
/// Fallback threshold, as a fraction of the loudest frame, for windows whose
/// ambient estimate would gate out every frame. That happens when the window
/// has no quiet stretch at all, as with a sustained tone.
pub const SILENCE_CAP_FRACTION: f64 = 0.5;
pub const MIN_VOICED_RUN: usize = 4;
pub const VAD_PROXIMITY_MS: u32 = 100;

/// Pitch per frame in Hz, zero where the frame is unvoiced or rejected.
pub type PitchTrack = FrameTrack;

/// Linear-interpolated percentile, `p` in [0, 100].
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64))
}

/// Loudness below which a frame is treated as silence.
pub fn silence_threshold(rms: &[f64]) -> f64 {
    let Some(ambient) = percentile(rms, AMBIENT_PERCENTILE) else {
        return 0.0;
    };
    let loudest = rms.iter().copied().fold(0.0, f64::max);
    let threshold = ambient * SIGNAL_TO_NOISE;
    if threshold > loudest {
        loudest * SILENCE_CAP_FRACTION
    } else {
        threshold
    }
}

/// Reusable scratch space for per-frame autocorrelation.
struct Autocorrelator {
    rate: f64,
    min_lag: usize,
    max_lag: usize,
    centered: Vec<f64>,
    cumsq: Vec<f64>,
    corr: Vec<f64>,
}

/// Best candidate period in a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodEstimate {
    pub frequency_hz: f64,
    pub correlation: f64,
}

impl Autocorrelator {
    fn new(rate: u32, span: usize) -> Self {
        let rate = f64::from(rate);
        let max_lag = ((rate / PITCH_FLOOR_HZ).ceil() as usize).min(span.saturating_sub(2));
        Self {
            rate,
            min_lag: 2,
            max_lag,
            centered: Vec::with_capacity(span),
            cumsq: Vec::with_capacity(span + 1),
            corr: vec![0.0; max_lag + 2],
        }
    }

    fn estimate(&mut self, frame: &[f64]) -> Option<PeriodEstimate> {
        let n = frame.len();
        if self.max_lag <= self.min_lag + 1 {
            return None;
        }
        let mean = frame.iter().sum::<f64>() / n as f64;
        self.centered.clear();
        self.centered.extend(frame.iter().map(|s| s - mean));
        self.cumsq.clear();
        self.cumsq.push(0.0);
        let mut acc = 0.0;
        for s in &self.centered {
            acc += s * s;
            self.cumsq.push(acc);
        }
        if acc <= 0.0 {
            return None;
        }

        let x = &self.centered;
        let top = self.max_lag + 1;
        for lag in (self.min_lag - 1)..=top {
            let overlap = n - lag;
            let dot: f64 = dot(&x[..overlap], &x[lag..]);
            let head = self.cumsq[overlap];
            let tail = self.cumsq[n] - self.cumsq[lag];
            let denom = (head * tail).sqrt();
            self.corr[lag] = if denom > 0.0 { dot / denom } else { 0.0 };
        }

        let r = &self.corr;
        let mut best = f64::NEG_INFINITY;
        for lag in self.min_lag..=self.max_lag {
            if r[lag] > r[lag - 1] && r[lag] >= r[lag + 1] && r[lag] > best {
                best = r[lag];
            }
        }
        if !best.is_finite() {
            return None;
        }
        let lag = (self.min_lag..=self.max_lag)
            .find(|&l| r[l] > r[l - 1] && r[l] >= r[l + 1] && r[l] >= OCTAVE_TOLERANCE * best)?;

        let (a, b, c) = (r[lag - 1], r[lag], r[lag + 1]);
        let curvature = a - 2.0 * b + c;
        let (shift, peak) = if curvature < 0.0 {
            let d = 0.5 * (a - c) / curvature;
            (d, b - 0.25 * (a - c) * d)
        } else {
            (0.0, b)
        };
        Some(PeriodEstimate {
            frequency_hz: self.rate / (lag as f64 + shift),
            correlation: peak.min(1.0),
        })
    }
}

// Four independent accumulators let the compiler vectorize the reduction.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for i in 0..chunks {
        let j = i * 4;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in chunks * 4..n {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Strongest periodicity of a single frame, before any gating.
pub fn frame_period(frame: &[f64], rate: u32) -> Option<PeriodEstimate> {
    Autocorrelator::new(rate, frame.len()).estimate(frame)
}

/// Zero out runs of non-zero values shorter than `min_run`.
pub fn prune_short_runs(values: &mut [f64], min_run: usize) {
    let mut i = 0;
    while i < values.len() {
        if values[i] == 0.0 {
            i += 1;
            continue;
        }
        let start = i;
        while i < values.len() && values[i] != 0.0 {
            i += 1;
        }
        if i - start < min_run {
            values[start..i].iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

/// Per-frame pitch with silence gating and run pruning.
pub fn pitch_track(win: &AudioWindow, rms: &FrameTrack, cfg: &AnalysisConfig) -> Result<PitchTrack> {
    let grid = FrameGrid::new(cfg, win.sample_rate);
    let count = grid.count(win.samples.len());
    if rms.len() != count {
        return Err(Error::GridMismatch {
            left: count,
            right: rms.len(),
        });
    }
    let threshold = silence_threshold(&rms.values);
    let mut ac = Autocorrelator::new(win.sample_rate, grid.span);
    let mut values: Vec<f64> = grid
        .frames(&win.samples)
        .zip(&rms.values)
        .map(|(frame, &loudness)| {
            if loudness <= 0.0 || loudness < threshold {
                return 0.0;
            }
            match ac.estimate(frame) {
                Some(p)
                    if p.correlation >= VOICING_THRESHOLD
                        && (PITCH_FLOOR_HZ..=PITCH_CEILING_HZ).contains(&p.frequency_hz) =>
                {
                    p.frequency_hz
                }
                _ => 0.0,
            }
        })
        .collect();
    prune_short_runs(&mut values, MIN_VOICED_RUN);
    Ok(FrameTrack::new(TrackKind::PitchHz, values, cfg))
}

/// Prefix counts of non-zero entries; `counts[i]` covers `values[..i]`.
pub(crate) fn nonzero_prefix(values: &[f64]) -> Vec<usize> {
    let mut counts = Vec::with_capacity(values.len() + 1);
    counts.push(0);
    let mut n = 0;
    for &v in values {
        n += usize::from(v != 0.0);
        counts.push(n);
    }
    counts
}

/// Whether any entry within `radius` of `i` is non-zero.
pub(crate) fn any_within(prefix: &[usize], i: usize, radius: usize) -> bool {
    let len = prefix.len() - 1;
    let lo = i.saturating_sub(radius);
    let hi = (i + radius + 1).min(len);
    prefix[hi] > prefix[lo]
}

/// Keep pitch only within 100 ms of a frame flagged as voice.
pub fn gate_by_vad(pitch: &PitchTrack, vad: &FrameTrack, cfg: &AnalysisConfig) -> Result<PitchTrack> {
    pitch.ensure_same_grid(vad)?;
    let radius = cfg.frames_within_ms(VAD_PROXIMITY_MS);
    let prefix = nonzero_prefix(&vad.values);
    let values = pitch
        .values
        .iter()
        .enumerate()
        .map(|(i, &p)| if any_within(&prefix, i, radius) { p } else { 0.0 })
        .collect();
    Ok(FrameTrack::new(TrackKind::PitchHz, values, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::frame_rms;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sine(freq: f64, amp: f64, secs: f64, rate: u32) -> AudioWindow {
        let n = (secs * f64::from(rate)) as usize;
        let s = (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / f64::from(rate)).sin()).collect();
        AudioWindow::new(s, rate, 0.0)
    }

    fn track(win: &AudioWindow) -> PitchTrack {
        let cfg = AnalysisConfig::default();
        pitch_track(win, &frame_rms(win, &cfg), &cfg).unwrap()
    }

    fn flags(values: Vec<f64>) -> FrameTrack {
        FrameTrack::new(TrackKind::VadFlag, values, &AnalysisConfig::default())
    }

    #[test]
    fn sine_220_is_tracked() {
        let p = track(&sine(220.0, 0.5, 5.0, 16_000));
        let voiced: Vec<f64> = p.values.iter().copied().filter(|&v| v > 0.0).collect();
        assert!(voiced.len() > p.len() / 2);
        assert!(voiced.iter().all(|v| (v - 220.0).abs() <= 4.0));
    }

    #[test]
    fn sine_above_ceiling_is_rejected() {
        let p = track(&sine(500.0, 0.5, 2.0, 16_000));
        assert!(p.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn silence_is_unvoiced() {
        let p = track(&AudioWindow::new(vec![0.0; 16_000], 16_000, 0.0));
        assert!(p.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[4.0, 1.0, 3.0, 2.0, 5.0], 50.0), Some(3.0));
        assert_eq!(percentile(&[0.0, 10.0], 10.0), Some(1.0));
        assert_eq!(percentile(&[], 10.0), None);
    }

    #[test]
    fn pruning_removes_short_runs_only() {
        let mut v = vec![0.0, 100.0, 100.0, 100.0, 0.0, 120.0, 120.0, 120.0, 120.0, 0.0];
        prune_short_runs(&mut v, 4);
        assert_eq!(v, vec![0.0, 0.0, 0.0, 0.0, 0.0, 120.0, 120.0, 120.0, 120.0, 0.0]);
    }

    #[test]
    fn vad_gate_examples() {
        let cfg = AnalysisConfig::default();
        let pitch = FrameTrack::new(TrackKind::PitchHz, vec![150.0; 50], &cfg);
        let gated = gate_by_vad(&pitch, &flags(vec![0.0; 50]), &cfg).unwrap();
        assert!(gated.values.iter().all(|&v| v == 0.0));

        let mut p = vec![0.0; 50];
        p[30] = 150.0;
        let mut vad = vec![0.0; 50];
        vad[35] = 1.0;
        let gated = gate_by_vad(&FrameTrack::new(TrackKind::PitchHz, p, &cfg), &flags(vad), &cfg).unwrap();
        assert_eq!(gated.values[30], 150.0);

        let mut p = vec![0.0; 50];
        p[0] = 150.0;
        let mut vad = vec![0.0; 50];
        vad[15] = 1.0;
        let gated = gate_by_vad(&FrameTrack::new(TrackKind::PitchHz, p, &cfg), &flags(vad), &cfg).unwrap();
        assert_eq!(gated.values[0], 0.0);
    }

    #[test]
    fn vad_gate_rejects_grid_mismatch() {
        let cfg = AnalysisConfig::default();
        let pitch = FrameTrack::new(TrackKind::PitchHz, vec![0.0; 10], &cfg);
        assert!(matches!(
            gate_by_vad(&pitch, &flags(vec![0.0; 11]), &cfg),
            Err(Error::GridMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn pruning_is_idempotent(v in proptest::collection::vec(prop_oneof![Just(0.0), 80.0f64..400.0], 0..200)) {
            let mut once = v.clone();
            prune_short_runs(&mut once, 4);
            let mut twice = once.clone();
            prune_short_runs(&mut twice, 4);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn gate_only_zeroes(
            p in proptest::collection::vec(prop_oneof![Just(0.0), 80.0f64..400.0], 1..200),
            seed in any::<u64>(),
        ) {
            let cfg = AnalysisConfig::default();
            let vad: Vec<f64> = (0..p.len()).map(|i| f64::from(((seed >> (i % 64)) & 1) as u8)).collect();
            let pitch = FrameTrack::new(TrackKind::PitchHz, p.clone(), &cfg);
            let gated = gate_by_vad(&pitch, &flags(vad), &cfg).unwrap();
            for (g, orig) in gated.values.iter().zip(&p) {
                prop_assert!(*g == 0.0 || g == orig);
            }
        }

        #[test]
        fn amplitude_does_not_move_pitch(c in 0.1f64..1.0) {
            let base = track(&sine(180.0, 0.8, 1.0, 16_000));
            let scaled = track(&sine(180.0, 0.8 * c, 1.0, 16_000));
            for (a, b) in base.values.iter().zip(&scaled.values) {
                if *a > 0.0 && *b > 0.0 {
                    prop_assert!((a - b).abs() < 1.0);
                }
            }
        }
    }
}

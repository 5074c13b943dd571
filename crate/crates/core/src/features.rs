//! Per-frame primitives: short-term energy, RMS intensity, zero-crossing rate.

use crate::error::{Error, Result};
use crate::framing::{AnalysisConfig, AudioWindow, FrameGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackKind {
    Energy,
    Rms,
    Zcr,
    PitchHz,
    VadFlag,
}

/// One value per frame of a window, on the shared frame grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrack {
    pub kind: TrackKind,
    pub values: Vec<f64>,
    pub frame_step_ms: u32,
    pub frame_span_ms: u32,
}

impl FrameTrack {
    pub fn new(kind: TrackKind, values: Vec<f64>, cfg: &AnalysisConfig) -> Self {
        Self {
            kind,
            values,
            frame_step_ms: cfg.frame_step_ms,
            frame_span_ms: cfg.frame_span_ms,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ensure_same_grid(&self, other: &FrameTrack) -> Result<()> {
        if self.len() != other.len()
            || self.frame_step_ms != other.frame_step_ms
            || self.frame_span_ms != other.frame_span_ms
        {
            return Err(Error::GridMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }
}

fn per_frame(win: &AudioWindow, cfg: &AnalysisConfig, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    FrameGrid::new(cfg, win.sample_rate).frames(&win.samples).map(f).collect()
}

fn sum_squares(frame: &[f64]) -> f64 {
    frame.iter().map(|s| s * s).sum()
}

pub fn frame_rms(win: &AudioWindow, cfg: &AnalysisConfig) -> FrameTrack {
    let values = per_frame(win, cfg, |f| (sum_squares(f) / f.len() as f64).sqrt());
    FrameTrack::new(TrackKind::Rms, values, cfg)
}

/// Unnormalized sum of squared samples per frame.
pub fn frame_energy(win: &AudioWindow, cfg: &AnalysisConfig) -> FrameTrack {
    FrameTrack::new(TrackKind::Energy, per_frame(win, cfg, sum_squares), cfg)
}

/// Sign changes per sample. Exact zeros carry the sign of the sample before
/// them; leading zeros take the sign of the first non-zero sample.
pub fn zero_crossing_rate(frame: &[f64]) -> f64 {
    let Some(first) = frame.iter().find(|&&s| s != 0.0) else {
        return 0.0;
    };
    let mut positive = *first > 0.0;
    let mut crossings = 0usize;
    for &s in frame {
        if s == 0.0 {
            continue;
        }
        let p = s > 0.0;
        if p != positive {
            crossings += 1;
            positive = p;
        }
    }
    crossings as f64 / frame.len() as f64
}

pub fn frame_zcr(win: &AudioWindow, cfg: &AnalysisConfig) -> FrameTrack {
    FrameTrack::new(TrackKind::Zcr, per_frame(win, cfg, zero_crossing_rate), cfg)
}

/// Arithmetic mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Empty("cannot summarize an empty track"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

pub fn summarize(track: &FrameTrack) -> Result<(f64, f64)> {
    mean_std(&track.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn window(samples: Vec<f64>, rate: u32) -> AudioWindow {
        AudioWindow::new(samples, rate, 0.0)
    }

    #[test]
    fn rms_of_constant_and_silence() {
        let cfg = AnalysisConfig::default();
        let t = frame_rms(&window(vec![0.5; 16_000], 16_000), &cfg);
        assert_eq!(t.len(), 96);
        assert!(t.values.iter().all(|&v| (v - 0.5).abs() < 1e-12));
        let t = frame_rms(&window(vec![0.0; 16_000], 16_000), &cfg);
        assert!(t.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rms_of_full_scale_sine() {
        let cfg = AnalysisConfig::default();
        let s = (0..16_000).map(|i| (2.0 * PI * 1000.0 * i as f64 / 16_000.0).sin()).collect();
        let t = frame_rms(&window(s, 16_000), &cfg);
        assert!(t.values.iter().all(|&v| (v - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01));
    }

    #[test]
    fn energy_examples() {
        let cfg = AnalysisConfig::default();
        let e = frame_energy(&window(vec![0.5; 800], 16_000), &cfg);
        assert_eq!(e.values, vec![200.0]);
        let e = frame_energy(&window(vec![0.0; 800], 16_000), &cfg);
        assert_eq!(e.values, vec![0.0]);
        let mut imp = vec![0.0; 800];
        imp[400] = 1.0;
        assert_eq!(frame_energy(&window(imp, 16_000), &cfg).values, vec![1.0]);
    }

    #[test]
    fn zcr_examples() {
        let alt: Vec<f64> = (0..800).map(|i| if i % 2 == 0 { 0.3 } else { -0.3 }).collect();
        assert!((zero_crossing_rate(&alt) - 1.0).abs() < 0.002);
        assert_eq!(zero_crossing_rate(&[0.2; 800]), 0.0);
        assert_eq!(zero_crossing_rate(&[0.0; 10]), 0.0);
        // Zeros inherit the previous sign: + 0 0 - counts once.
        assert_eq!(zero_crossing_rate(&[1.0, 0.0, 0.0, -1.0]), 0.25);
        assert_eq!(zero_crossing_rate(&[0.0, -1.0, 0.0, 1.0]), 0.25);
    }

    #[test]
    fn zcr_of_square_wave() {
        // Transitions at 40 + 80k put exactly ten edges in every 800-sample frame.
        let cfg = AnalysisConfig::default();
        let s: Vec<f64> = (0..16_000)
            .map(|i| if (2.0 * PI * 100.0 * i as f64 / 16_000.0).cos() >= 0.0 { 0.5 } else { -0.5 })
            .collect();
        let z = frame_zcr(&window(s, 16_000), &cfg);
        assert!(z.values.iter().all(|&v| (v - 0.0125).abs() <= 0.001), "{:?}", &z.values[..4]);
    }

    #[test]
    fn summaries() {
        assert_eq!(mean_std(&[1.0, 1.0, 1.0]).unwrap(), (1.0, 0.0));
        assert_eq!(mean_std(&[0.0, 4.0]).unwrap(), (2.0, 2.0));
        assert_eq!(mean_std(&[0.0, 1.0, 0.0, 1.0]).unwrap(), (0.5, 0.5));
        assert!(mean_std(&[]).is_err());
    }

    #[test]
    fn short_window_gives_empty_tracks() {
        let cfg = AnalysisConfig::default();
        assert!(frame_rms(&window(vec![0.1; 100], 16_000), &cfg).is_empty());
    }

    proptest! {
        #[test]
        fn energy_equals_rms_squared_times_count(v in proptest::collection::vec(-1.0f64..1.0, 800..2400)) {
            let cfg = AnalysisConfig::default();
            let w = window(v, 16_000);
            let e = frame_energy(&w, &cfg);
            let r = frame_rms(&w, &cfg);
            for (e, r) in e.values.iter().zip(&r.values) {
                let rebuilt = r * r * 800.0;
                prop_assert!((e - rebuilt).abs() <= 1e-9 * e.abs().max(1e-300));
            }
        }

        #[test]
        fn scaling_behaviour(v in proptest::collection::vec(-1.0f64..1.0, 800..1600), c in 0.01f64..10.0) {
            let cfg = AnalysisConfig::default();
            let w = window(v.clone(), 16_000);
            let ws = window(v.iter().map(|s| s * c).collect(), 16_000);
            for (a, b) in frame_rms(&w, &cfg).values.iter().zip(&frame_rms(&ws, &cfg).values) {
                prop_assert!((a * c - b).abs() <= 1e-9 * b.abs().max(1e-12));
            }
            for (a, b) in frame_energy(&w, &cfg).values.iter().zip(&frame_energy(&ws, &cfg).values) {
                prop_assert!((a * c * c - b).abs() <= 1e-9 * b.abs().max(1e-12));
            }
            prop_assert_eq!(frame_zcr(&w, &cfg).values, frame_zcr(&ws, &cfg).values);
        }
    }
}

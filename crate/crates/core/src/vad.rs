//! Adaptive-threshold voice activity detection.
//!
//! A frame is voiced when its energy clears an adaptive threshold, its
//! zero-crossing rate falls inside the vocal band, and some frame within
//! `pitch_search_radius` carries a non-zero pitch. The threshold is
//! `primary_threshold * ln(min_energy)`; `min_energy` starts as the mean
//! energy of the first `init_span` frames and becomes the running mean of
//! that value and every non-voiced frame seen so far. Voiced runs shorter
//! than `min_run` frames are discarded afterwards.
//!
//! State is local to one window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{mean_std, FrameTrack, TrackKind};
use crate::framing::AnalysisConfig;
use crate::pitch::{any_within, nonzero_prefix, PitchTrack};

/// Floor applied before taking the log of a non-positive energy.
pub const MIN_ENERGY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VadParams {
    pub primary_threshold: f64,
    pub zcr_max: f64,
    pub zcr_min: f64,
    pub pitch_search_radius: usize,
    pub min_run: usize,
    /// Frames averaged for the initial `min_energy`; assumed silent.
    pub init_span: usize,
}

impl Default for VadParams {
    fn default() -> Self {
        Self {
            primary_threshold: 40.0,
            zcr_max: 0.04,
            zcr_min: 0.008,
            pitch_search_radius: 8,
            min_run: 10,
            init_span: 30,
        }
    }
}

impl VadParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.zcr_min < self.zcr_max) {
            return Err(Error::Config("vad zcr_min must be below zcr_max".into()));
        }
        if self.min_run == 0 || self.init_span == 0 {
            return Err(Error::Config("vad min_run and init_span must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VadResult {
    pub flags: FrameTrack,
    pub mean: f64,
    pub std_dev: f64,
    /// Set when `min_energy` reached zero and had to be floored.
    pub degenerate_silence: bool,
}

impl VadResult {
    pub fn is_active(&self, frame: usize) -> bool {
        self.flags.values[frame] != 0.0
    }
}

/// Per-frame adaptive state, recorded for inspection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VadTrace {
    /// Threshold each frame was compared against.
    pub thresholds: Vec<f64>,
    /// `min_energy` after each frame's update.
    pub min_energy: Vec<f64>,
    /// Decision before run pruning.
    pub raw_flags: Vec<bool>,
}

/// Clear every run of `true` shorter than `min_run`.
pub fn remove_short_runs(flags: &mut [bool], min_run: usize) {
    let mut i = 0;
    while i < flags.len() {
        if !flags[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < flags.len() && flags[i] {
            i += 1;
        }
        if i - start < min_run {
            flags[start..i].iter_mut().for_each(|f| *f = false);
        }
    }
}

pub fn detect_voice_activity(
    energy: &FrameTrack,
    zcr: &FrameTrack,
    pitch: &PitchTrack,
    p: &VadParams,
) -> Result<VadResult> {
    detect_voice_activity_traced(energy, zcr, pitch, p).map(|(r, _)| r)
}

pub fn detect_voice_activity_traced(
    energy: &FrameTrack,
    zcr: &FrameTrack,
    pitch: &PitchTrack,
    p: &VadParams,
) -> Result<(VadResult, VadTrace)> {
    if energy.is_empty() {
        return Err(Error::Empty("voice activity needs at least one frame"));
    }
    energy.ensure_same_grid(zcr)?;
    energy.ensure_same_grid(pitch)?;

    let e = &energy.values;
    let n = e.len();
    let mut degenerate = false;
    let mut log_threshold = |min_energy: f64| {
        let floored = if min_energy > MIN_ENERGY_FLOOR {
            min_energy
        } else {
            degenerate = true;
            MIN_ENERGY_FLOOR
        };
        p.primary_threshold * floored.ln()
    };

    let init = p.init_span.min(n);
    let mut min_energy = e[..init].iter().sum::<f64>() / init as f64;
    let mut threshold = log_threshold(min_energy);
    let mut silence_count = 0usize;
    let pitch_prefix = nonzero_prefix(&pitch.values);

    let mut trace = VadTrace {
        thresholds: Vec::with_capacity(n),
        min_energy: Vec::with_capacity(n),
        raw_flags: Vec::with_capacity(n),
    };
    let mut flags = vec![false; n];
    for i in 0..n {
        trace.thresholds.push(threshold);
        let z = zcr.values[i];
        let voiced = e[i] > threshold
            && p.zcr_min < z
            && z < p.zcr_max
            && any_within(&pitch_prefix, i, p.pitch_search_radius);
        if voiced {
            flags[i] = true;
        } else {
            silence_count += 1;
            let k = silence_count as f64;
            min_energy = (k * min_energy + e[i]) / (k + 1.0);
            threshold = log_threshold(min_energy);
        }
        trace.min_energy.push(min_energy);
    }
    trace.raw_flags = flags.clone();
    remove_short_runs(&mut flags, p.min_run);

    let values: Vec<f64> = flags.iter().map(|&f| f64::from(u8::from(f))).collect();
    let (mean, std_dev) = mean_std(&values)?;
    let cfg = AnalysisConfig {
        frame_step_ms: energy.frame_step_ms,
        frame_span_ms: energy.frame_span_ms,
        ..AnalysisConfig::default()
    };
    Ok((
        VadResult {
            flags: FrameTrack::new(TrackKind::VadFlag, values, &cfg),
            mean,
            std_dev,
            degenerate_silence: degenerate,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tr(kind: TrackKind, v: Vec<f64>) -> FrameTrack {
        FrameTrack::new(kind, v, &AnalysisConfig::default())
    }

    #[test]
    fn digital_silence_is_never_voiced() {
        let n = 100;
        let r = detect_voice_activity(
            &tr(TrackKind::Energy, vec![0.0; n]),
            &tr(TrackKind::Zcr, vec![0.0; n]),
            &tr(TrackKind::PitchHz, vec![0.0; n]),
            &VadParams::default(),
        )
        .unwrap();
        assert_eq!(r.mean, 0.0);
        assert!(r.degenerate_silence);
    }

    #[test]
    fn short_burst_is_pruned() {
        let n = 100;
        let mut energy = vec![0.001; n];
        let mut zcr = vec![0.3; n];
        let mut pitch = vec![0.0; n];
        for i in 50..55 {
            energy[i] = 5.0;
            zcr[i] = 0.02;
            pitch[i] = 120.0;
        }
        let (r, trace) = detect_voice_activity_traced(
            &tr(TrackKind::Energy, energy),
            &tr(TrackKind::Zcr, zcr),
            &tr(TrackKind::PitchHz, pitch),
            &VadParams::default(),
        )
        .unwrap();
        assert_eq!(trace.raw_flags.iter().filter(|&&f| f).count(), 5);
        assert_eq!(r.mean, 0.0);
    }

    #[test]
    fn long_burst_survives() {
        let n = 100;
        let mut energy = vec![0.001; n];
        let mut zcr = vec![0.3; n];
        let mut pitch = vec![0.0; n];
        for i in 40..60 {
            energy[i] = 5.0;
            zcr[i] = 0.02;
            pitch[i] = 120.0;
        }
        let r = detect_voice_activity(
            &tr(TrackKind::Energy, energy),
            &tr(TrackKind::Zcr, zcr),
            &tr(TrackKind::PitchHz, pitch),
            &VadParams::default(),
        )
        .unwrap();
        assert!((r.mean - 0.2).abs() < 1e-12);
        assert!((r.std_dev - 0.4).abs() < 1e-12);
    }

    #[test]
    fn zcr_band_is_exclusive() {
        let n = 20;
        for (z, expect) in [(0.008, 0.0), (0.04, 0.0), (0.009, 1.0), (0.039, 1.0)] {
            let r = detect_voice_activity(
                &tr(TrackKind::Energy, vec![0.5; n]),
                &tr(TrackKind::Zcr, vec![z; n]),
                &tr(TrackKind::PitchHz, vec![100.0; n]),
                &VadParams::default(),
            )
            .unwrap();
            assert_eq!(r.mean, expect, "zcr {z}");
        }
    }

    #[test]
    fn errors() {
        let p = VadParams::default();
        let empty = tr(TrackKind::Energy, vec![]);
        assert!(matches!(
            detect_voice_activity(&empty, &empty, &empty, &p),
            Err(Error::Empty(_))
        ));
        let a = tr(TrackKind::Energy, vec![1.0; 3]);
        let b = tr(TrackKind::Zcr, vec![1.0; 4]);
        assert!(matches!(
            detect_voice_activity(&a, &b, &a, &p),
            Err(Error::GridMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn zero_pitch_forces_silence(
            energy in proptest::collection::vec(0.0f64..50.0, 1..300),
            zcr_seed in proptest::collection::vec(0.0f64..0.1, 300),
        ) {
            let n = energy.len();
            let r = detect_voice_activity(
                &tr(TrackKind::Energy, energy),
                &tr(TrackKind::Zcr, zcr_seed[..n].to_vec()),
                &tr(TrackKind::PitchHz, vec![0.0; n]),
                &VadParams::default(),
            ).unwrap();
            prop_assert_eq!(r.mean, 0.0);
        }

        #[test]
        fn summary_bounds_and_pruning(
            energy in proptest::collection::vec(0.0f64..50.0, 1..300),
            zcr in proptest::collection::vec(0.0f64..0.06, 300),
            pitch in proptest::collection::vec(prop_oneof![Just(0.0), 80.0f64..300.0], 300),
        ) {
            let n = energy.len();
            let (r, trace) = detect_voice_activity_traced(
                &tr(TrackKind::Energy, energy),
                &tr(TrackKind::Zcr, zcr[..n].to_vec()),
                &tr(TrackKind::PitchHz, pitch[..n].to_vec()),
                &VadParams::default(),
            ).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.mean));
            prop_assert!((0.0..=0.5).contains(&r.std_dev));
            let kept = r.flags.values.iter().filter(|&&v| v == 1.0).count();
            let raw = trace.raw_flags.iter().filter(|&&f| f).count();
            prop_assert!(kept <= raw);
            let mut run = 0;
            for &v in r.flags.values.iter().chain(std::iter::once(&0.0)) {
                if v == 1.0 { run += 1 } else {
                    prop_assert!(run == 0 || run >= 10);
                    run = 0;
                }
            }
        }
    }
}

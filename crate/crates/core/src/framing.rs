//! The two-level time grid: analysis windows over the stream, and short
//! frames inside each window.
//!
//! Every boundary is computed by multiplying an index by a step in samples,
//! never by accumulating, so arbitrarily long streams do not drift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub window_ms: u32,
    pub step_ms: u32,
    pub frame_step_ms: u32,
    pub frame_span_ms: u32,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window_ms: 5000,
            step_ms: 1000,
            frame_step_ms: 10,
            frame_span_ms: 50,
        }
    }
}

/// Round a millisecond duration to the nearest whole sample count.
pub fn ms_to_samples(ms: u32, rate: u32) -> usize {
    (f64::from(ms) * f64::from(rate) / 1000.0).round() as usize
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_ms == 0 || self.step_ms == 0 || self.frame_step_ms == 0 || self.frame_span_ms == 0 {
            return Err(Error::Config("all analysis durations must be positive".into()));
        }
        if self.frame_span_ms < self.frame_step_ms {
            return Err(Error::Config("frame span must be at least the frame step".into()));
        }
        if self.window_ms < self.frame_span_ms {
            return Err(Error::Config("window must be at least one frame span".into()));
        }
        Ok(())
    }

    pub fn with_window_s(mut self, window_s: f64, step_s: f64) -> Self {
        self.window_ms = (window_s * 1000.0).round() as u32;
        self.step_ms = (step_s * 1000.0).round() as u32;
        self
    }

    pub fn window_samples(&self, rate: u32) -> usize {
        ms_to_samples(self.window_ms, rate)
    }

    pub fn step_samples(&self, rate: u32) -> usize {
        ms_to_samples(self.step_ms, rate).max(1)
    }

    pub fn frame_step_samples(&self, rate: u32) -> usize {
        ms_to_samples(self.frame_step_ms, rate).max(1)
    }

    pub fn frame_span_samples(&self, rate: u32) -> usize {
        ms_to_samples(self.frame_span_ms, rate).max(1)
    }

    pub fn window_duration_s(&self) -> f64 {
        f64::from(self.window_ms) / 1000.0
    }

    /// Number of frames within `ms` of a given frame.
    pub fn frames_within_ms(&self, ms: u32) -> usize {
        (ms / self.frame_step_ms) as usize
    }
}

/// Frame step and span in samples for one sample rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGrid {
    pub step: usize,
    pub span: usize,
}

impl FrameGrid {
    pub fn new(cfg: &AnalysisConfig, rate: u32) -> Self {
        Self {
            step: cfg.frame_step_samples(rate),
            span: cfg.frame_span_samples(rate),
        }
    }

    pub fn count(&self, window_len: usize) -> usize {
        if window_len < self.span {
            0
        } else {
            (window_len - self.span) / self.step + 1
        }
    }

    /// Sample range of frame `i`.
    pub fn bounds(&self, i: usize) -> (usize, usize) {
        let start = i * self.step;
        (start, start + self.span)
    }

    pub fn frames<'a>(&self, samples: &'a [f64]) -> impl Iterator<Item = &'a [f64]> + 'a {
        let grid = *self;
        (0..grid.count(samples.len())).map(move |i| {
            let (s, e) = grid.bounds(i);
            &samples[s..e]
        })
    }
}

/// Half-open sample ranges of every frame that fits inside the window.
pub fn frame_bounds(cfg: &AnalysisConfig, window_len: usize, rate: u32) -> Result<Vec<(usize, usize)>> {
    let grid = FrameGrid::new(cfg, rate);
    if window_len < grid.span {
        return Err(Error::EmptyWindow {
            len: window_len,
            span: grid.span,
        });
    }
    Ok((0..grid.count(window_len)).map(|i| grid.bounds(i)).collect())
}

/// One mono analysis window.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioWindow {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub start_time_s: f64,
}

impl AudioWindow {
    pub fn new(samples: Vec<f64>, sample_rate: u32, start_time_s: f64) -> Self {
        Self {
            samples,
            sample_rate,
            start_time_s,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

fn window_start_s(cfg: &AnalysisConfig, index: usize) -> f64 {
    index as f64 * f64::from(cfg.step_ms) / 1000.0
}

/// Cut a complete mono signal into windows. A trailing remainder shorter
/// than one window produces nothing.
pub fn windows(samples: &[f64], rate: u32, cfg: &AnalysisConfig) -> Vec<AudioWindow> {
    let len = cfg.window_samples(rate);
    let step = cfg.step_samples(rate);
    if len == 0 || samples.len() < len {
        return Vec::new();
    }
    (0..=(samples.len() - len) / step)
        .map(|k| {
            let start = k * step;
            AudioWindow::new(samples[start..start + len].to_vec(), rate, window_start_s(cfg, k))
        })
        .collect()
}

/// Assembles windows from samples arriving in arbitrary chunk sizes.
///
/// Emits exactly the windows [`windows`] would produce on the concatenated
/// input, as soon as each is fully covered.
#[derive(Debug, Clone)]
pub struct WindowAssembler {
    cfg: AnalysisConfig,
    rate: u32,
    window_len: usize,
    step: usize,
    buf: Vec<f64>,
    /// Absolute sample index of `buf[0]`.
    buf_origin: usize,
    next_index: usize,
}

impl WindowAssembler {
    pub fn new(cfg: AnalysisConfig, rate: u32) -> Self {
        Self {
            cfg,
            rate,
            window_len: cfg.window_samples(rate),
            step: cfg.step_samples(rate),
            buf: Vec::new(),
            buf_origin: 0,
            next_index: 0,
        }
    }

    pub fn push(&mut self, chunk: &[f64]) -> Vec<AudioWindow> {
        self.buf.extend_from_slice(chunk);
        let mut out = Vec::new();
        loop {
            let start = self.next_index * self.step;
            let local = start - self.buf_origin;
            if local + self.window_len > self.buf.len() {
                break;
            }
            out.push(AudioWindow::new(
                self.buf[local..local + self.window_len].to_vec(),
                self.rate,
                window_start_s(&self.cfg, self.next_index),
            ));
            self.next_index += 1;
        }
        // Drop samples no future window can reach.
        let keep_from = (self.next_index * self.step).saturating_sub(self.buf_origin);
        if keep_from > 0 {
            let keep_from = keep_from.min(self.buf.len());
            self.buf.drain(..keep_from);
            self.buf_origin += keep_from;
        }
        out
    }

    pub fn emitted(&self) -> usize {
        self.next_index
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn frame_counts() {
        let cfg = AnalysisConfig::default();
        assert_eq!(frame_bounds(&cfg, 80_000, 16_000).unwrap().len(), 496);
        assert_eq!(frame_bounds(&cfg, 16_000, 16_000).unwrap().len(), 96);
        assert_eq!(frame_bounds(&cfg, 800, 16_000).unwrap(), vec![(0, 800)]);
        assert!(matches!(
            frame_bounds(&cfg, 799, 16_000),
            Err(Error::EmptyWindow { len: 799, span: 800 })
        ));
    }

    #[test]
    fn frame_spans_round_to_nearest_sample() {
        let cfg = AnalysisConfig::default();
        assert_eq!(cfg.frame_span_samples(44_100), 2205);
        assert_eq!(cfg.frame_step_samples(44_100), 441);
        assert_eq!(cfg.frame_step_samples(11_025), 110);
    }

    #[test]
    fn window_counts() {
        let cfg = AnalysisConfig::default();
        let rate = 100;
        let w = windows(&vec![0.0; 700], rate, &cfg);
        assert_eq!(w.len(), 3);
        let starts: Vec<f64> = w.iter().map(|w| w.start_time_s).collect();
        assert_eq!(starts, vec![0.0, 1.0, 2.0]);
        assert!(windows(&vec![0.0; 490], rate, &cfg).is_empty());
        assert_eq!(windows(&vec![0.0; 500], rate, &cfg).len(), 1);
        assert!(windows(&[], rate, &cfg).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(AnalysisConfig::default().validate().is_ok());
        let bad = AnalysisConfig {
            frame_span_ms: 5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AnalysisConfig {
            window_ms: 40,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn assembler_matches_batch_windowing(
            len in 0usize..3000,
            chunks in proptest::collection::vec(1usize..400, 1..40),
        ) {
            let cfg = AnalysisConfig { window_ms: 500, step_ms: 100, ..Default::default() };
            let rate = 1000;
            let signal: Vec<f64> = (0..len).map(|i| (i as f64).sin()).collect();
            let batch = windows(&signal, rate, &cfg);
            let mut asm = WindowAssembler::new(cfg, rate);
            let mut streamed = Vec::new();
            let mut pos = 0;
            for c in chunks.iter().cycle() {
                if pos >= len { break; }
                let end = (pos + c).min(len);
                streamed.extend(asm.push(&signal[pos..end]));
                pos = end;
            }
            prop_assert_eq!(streamed, batch);
        }

        #[test]
        fn consecutive_windows_overlap_exactly(len in 500usize..2000) {
            let cfg = AnalysisConfig { window_ms: 500, step_ms: 100, ..Default::default() };
            let signal: Vec<f64> = (0..len).map(|i| i as f64).collect();
            let w = windows(&signal, 1000, &cfg);
            for pair in w.windows(2) {
                prop_assert_eq!(&pair[0].samples[100..], &pair[1].samples[..400]);
            }
        }
    }
}

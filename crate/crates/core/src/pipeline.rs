//! Per-window estimation, in files and in streams.
//!
//! Voice activity is computed first. A window with no voice activity is
//! answered with an estimate of exactly zero and none of the remaining
//! features are computed. Otherwise intensity, gated pitch, speaking rate
//! and any enabled optional features are assembled into a
//! [`FeatureVector`] and passed through the network.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::audio::ChunkSource;
use crate::error::{Error, Result};
use crate::features::{frame_energy, frame_rms, frame_zcr, summarize, FrameTrack};
use crate::fillers::{detect_fillers, formant_track, FillerResult};
use crate::framing::{windows, AnalysisConfig, AudioWindow, WindowAssembler};
use crate::model::{FeatureSet, FeatureVector, ModelParams};
use crate::pitch::{gate_by_vad, pitch_track, PitchTrack};
use crate::syllables::{count_syllables, SyllableResult};
use crate::vad::{detect_voice_activity, VadParams, VadResult};

/// Externally measured breathing rate, sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct RespirationSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl RespirationSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: times.len(),
                right: values.len(),
            });
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Data("respiration timestamps must be strictly increasing".into()));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Data("respiration series contains non-finite values".into()));
        }
        Ok(Self { times, values })
    }

    /// Mean of the samples inside `[start, end)`, or the sample nearest the
    /// span's midpoint when none falls inside.
    pub fn rate_for(&self, start: f64, end: f64) -> Option<f64> {
        if self.times.is_empty() {
            return None;
        }
        let lo = self.times.partition_point(|&t| t < start);
        let hi = self.times.partition_point(|&t| t < end);
        if hi > lo {
            let inside = &self.values[lo..hi];
            return Some(inside.iter().sum::<f64>() / inside.len() as f64);
        }
        let mid = (start + end) / 2.0;
        let i = self.times.partition_point(|&t| t < mid);
        let nearest = match (i.checked_sub(1), self.times.get(i)) {
            (Some(j), Some(&t)) if mid - self.times[j] <= t - mid => j,
            (Some(j), None) => j,
            _ => i,
        };
        Some(self.values[nearest])
    }
}

/// Every intermediate track for one window. Fields after `vad` are `None`
/// when the window was short-circuited.
#[derive(Debug, Clone)]
pub struct WindowAnalysis {
    pub rms: FrameTrack,
    pub energy: FrameTrack,
    pub zcr: FrameTrack,
    pub pitch: PitchTrack,
    pub vad: VadResult,
    pub gated_pitch: Option<PitchTrack>,
    pub syllables: Option<SyllableResult>,
    pub fillers: Option<FillerResult>,
    pub features: Option<FeatureVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowEstimate {
    pub start_time_s: f64,
    pub estimate: f64,
    pub vad_mean: f64,
    pub features: Option<FeatureVector>,
}

impl WindowEstimate {
    pub fn is_short_circuit(&self) -> bool {
        self.features.is_none()
    }

    pub fn clamped(mut self, lo: f64, hi: f64) -> Self {
        self.estimate = self.estimate.clamp(lo, hi);
        self
    }
}

/// Result of consuming a stream. `error` is set when the source or a
/// window failed; `estimates` then holds everything emitted before that.
#[derive(Debug)]
pub struct StreamOutcome {
    pub estimates: Vec<WindowEstimate>,
    /// Time from a window becoming complete to its estimate being ready.
    pub latencies: Vec<Duration>,
    pub error: Option<Error>,
}

impl StreamOutcome {
    pub fn max_latency(&self) -> Option<Duration> {
        self.latencies.iter().max().copied()
    }
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    analysis: AnalysisConfig,
    vad: VadParams,
    feature_set: FeatureSet,
    respiration: Option<RespirationSeries>,
}

impl Pipeline {
    pub fn new(analysis: AnalysisConfig, vad: VadParams, feature_set: FeatureSet) -> Result<Self> {
        analysis.validate()?;
        vad.validate()?;
        Ok(Self {
            analysis,
            vad,
            feature_set,
            respiration: None,
        })
    }

    pub fn with_respiration(mut self, series: RespirationSeries) -> Self {
        self.respiration = Some(series);
        self
    }

    pub fn analysis(&self) -> &AnalysisConfig {
        &self.analysis
    }

    pub fn feature_set(&self) -> FeatureSet {
        self.feature_set
    }

    pub fn analyze(&self, win: &AudioWindow) -> Result<WindowAnalysis> {
        let cfg = &self.analysis;
        let expected = cfg.window_samples(win.sample_rate);
        if win.samples.len() != expected {
            return Err(Error::LengthMismatch {
                left: expected,
                right: win.samples.len(),
            });
        }
        let rms = frame_rms(win, cfg);
        let energy = frame_energy(win, cfg);
        let zcr = frame_zcr(win, cfg);
        let pitch = pitch_track(win, &rms, cfg)?;
        let vad = detect_voice_activity(&energy, &zcr, &pitch, &self.vad)?;
        let mut out = WindowAnalysis {
            rms,
            energy,
            zcr,
            pitch,
            vad,
            gated_pitch: None,
            syllables: None,
            fillers: None,
            features: None,
        };
        if out.vad.mean == 0.0 {
            return Ok(out);
        }

        let gated = gate_by_vad(&out.pitch, &out.vad.flags, cfg)?;
        let (intensity_mean, intensity_std) = summarize(&out.rms)?;
        let (pitch_mean, pitch_std) = summarize(&gated)?;
        let syllables = count_syllables(&out.rms, &out.zcr, &out.pitch, cfg)?;
        let mut values = vec![
            intensity_mean,
            intensity_std,
            pitch_mean,
            pitch_std,
            out.vad.mean,
            out.vad.std_dev,
            syllables.rate,
        ];
        if self.feature_set.has_respiration() {
            let series = self
                .respiration
                .as_ref()
                .ok_or_else(|| Error::Config("respiration feature enabled without a respiration series".into()))?;
            let rate = series
                .rate_for(win.start_time_s, win.start_time_s + cfg.window_duration_s())
                .ok_or(Error::Empty("respiration series"))?;
            values.push(rate);
        }
        if self.feature_set.has_fillers() {
            let formants = formant_track(win, &out.pitch, cfg)?;
            let fillers = detect_fillers(&formants, &out.vad, cfg)?;
            values.push(fillers.count_per_window as f64);
            out.fillers = Some(fillers);
        }
        out.features = Some(FeatureVector::new(self.feature_set, values)?);
        out.gated_pitch = Some(gated);
        out.syllables = Some(syllables);
        Ok(out)
    }

    fn check_model(&self, model: &ModelParams) -> Result<()> {
        if model.feature_set != self.feature_set {
            return Err(Error::FeatureSetMismatch {
                model: model.feature_set,
                expected: self.feature_set,
            });
        }
        Ok(())
    }

    pub fn estimate_window(&self, win: &AudioWindow, model: &ModelParams) -> Result<WindowEstimate> {
        self.check_model(model)?;
        let analysis = self.analyze(win)?;
        let estimate = match &analysis.features {
            Some(fv) => model.forward(fv)?,
            None => 0.0,
        };
        Ok(WindowEstimate {
            start_time_s: win.start_time_s,
            estimate,
            vad_mean: analysis.vad.mean,
            features: analysis.features,
        })
    }

    /// Whole-signal estimation; windows are processed in parallel and
    /// returned in start-time order.
    pub fn estimate_all(&self, samples: &[f64], rate: u32, model: &ModelParams) -> Result<Vec<WindowEstimate>> {
        self.check_model(model)?;
        windows(samples, rate, &self.analysis)
            .par_iter()
            .map(|w| self.estimate_window(w, model))
            .collect()
    }

    /// Feature extraction only, for building training sets.
    pub fn extract_all(&self, samples: &[f64], rate: u32) -> Result<Vec<(f64, f64, Option<FeatureVector>)>> {
        windows(samples, rate, &self.analysis)
            .par_iter()
            .map(|w| {
                let a = self.analyze(w)?;
                Ok((w.start_time_s, a.vad.mean, a.features))
            })
            .collect()
    }

    /// Consume `source` chunk by chunk, calling `emit` with each estimate
    /// and its latency as soon as its window completes. Returns the number
    /// of windows emitted.
    pub fn stream_with<S, F>(&self, source: &mut S, model: &ModelParams, mut emit: F) -> Result<usize>
    where
        S: ChunkSource + ?Sized,
        F: FnMut(WindowEstimate, Duration),
    {
        self.check_model(model)?;
        let mut assembler = WindowAssembler::new(self.analysis, source.sample_rate());
        while let Some(chunk) = source.next_chunk()? {
            for win in assembler.push(&chunk) {
                let ready = Instant::now();
                let est = self.estimate_window(&win, model)?;
                emit(est, ready.elapsed());
            }
        }
        Ok(assembler.emitted())
    }

    pub fn stream_estimates<S: ChunkSource + ?Sized>(&self, source: &mut S, model: &ModelParams) -> StreamOutcome {
        let mut estimates = Vec::new();
        let mut latencies = Vec::new();
        let error = self
            .stream_with(source, model, |e, l| {
                estimates.push(e);
                latencies.push(l);
            })
            .err();
        StreamOutcome {
            estimates,
            latencies,
            error,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{AudioBuffer, BufferChunks};

    fn constant_model(set: FeatureSet, b: f64) -> ModelParams {
        let mut m = ModelParams::init(&[set.dim(), 4, 1], set, 0).unwrap();
        m.layers.iter_mut().for_each(|l| l.weights.iter_mut().for_each(|w| *w = 0.0));
        m.layers[1].bias[0] = b;
        m
    }

    fn pipeline() -> Pipeline {
        Pipeline::new(AnalysisConfig::default(), VadParams::default(), FeatureSet::Base).unwrap()
    }

    #[test]
    fn silent_window_short_circuits() {
        let win = AudioWindow::new(vec![0.0; 80000], 16000, 0.0);
        let est = pipeline().estimate_window(&win, &constant_model(FeatureSet::Base, 3.0)).unwrap();
        assert_eq!(est.estimate, 0.0);
        assert!(est.is_short_circuit());
    }

    #[test]
    fn voiced_window_reaches_the_network() {
        let s = crate::synth::speech_window(4, 16000, 5.0, 0.5).unwrap();
        let win = AudioWindow::new(s.audio.samples().to_vec(), 16000, 0.0);
        let est = pipeline().estimate_window(&win, &constant_model(FeatureSet::Base, 2.5)).unwrap();
        assert!(est.vad_mean > 0.0);
        assert_eq!(est.estimate, 2.5);
    }

    #[test]
    fn model_feature_set_must_match() {
        let win = AudioWindow::new(vec![0.0; 80000], 16000, 0.0);
        let err = pipeline()
            .estimate_window(&win, &constant_model(FeatureSet::Respiration, 1.0))
            .unwrap_err();
        assert!(matches!(err, Error::FeatureSetMismatch { .. }));
    }

    #[test]
    fn wrong_window_length_is_rejected() {
        let win = AudioWindow::new(vec![0.0; 1000], 16000, 0.0);
        assert!(pipeline().analyze(&win).is_err());
    }

    #[test]
    fn stream_of_ten_seconds_yields_six_windows() {
        let buf = AudioBuffer::mono(vec![0.0; 160000], 16000).unwrap();
        let out = pipeline().stream_estimates(&mut BufferChunks::new(&buf, 500), &constant_model(FeatureSet::Base, 1.0));
        assert!(out.error.is_none());
        let starts: Vec<f64> = out.estimates.iter().map(|e| e.start_time_s).collect();
        assert_eq!(starts, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(out.latencies.len(), 6);
    }

    #[test]
    fn respiration_alignment() {
        let r = RespirationSeries::new(vec![0.0, 1.0, 2.0, 10.0], vec![10.0, 12.0, 14.0, 20.0]).unwrap();
        assert_eq!(r.rate_for(0.0, 5.0), Some(12.0));
        // Nothing inside [5, 9): midpoint 7 is nearer to 10 than to 2.
        assert_eq!(r.rate_for(5.0, 9.0), Some(20.0));
        assert_eq!(r.rate_for(3.0, 4.0), Some(14.0));
        assert!(RespirationSeries::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn respiration_feature_needs_a_series() {
        let s = crate::synth::speech_window(4, 16000, 5.0, 0.5).unwrap();
        let win = AudioWindow::new(s.audio.samples().to_vec(), 16000, 0.0);
        let p = Pipeline::new(AnalysisConfig::default(), VadParams::default(), FeatureSet::Respiration).unwrap();
        assert!(matches!(p.analyze(&win), Err(Error::Config(_))));
        let p = p.with_respiration(RespirationSeries::new(vec![2.0], vec![15.0]).unwrap());
        let fv = p.analyze(&win).unwrap().features.unwrap();
        assert_eq!(fv.values()[7], 15.0);
    }
}

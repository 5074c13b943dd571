//! Feature-extraction timing across window sizes.
//!
//! Each stage is timed on the first window of each size, after one
//! discarded warm-up pass, with a monotonic clock. File I/O and network
//! inference are excluded. Stages that depend on another stage's output
//! (voice activity needs pitch, speaking rate needs intensity and pitch)
//! are given it precomputed, so each column measures only its own work.

use std::fmt::Write as _;
use std::time::Instant;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::features::{frame_energy, frame_rms, frame_zcr, summarize};
use crate::framing::{AnalysisConfig, AudioWindow};
use crate::model::FeatureSet;
use crate::pipeline::Pipeline;
use crate::pitch::{gate_by_vad, pitch_track};
use crate::syllables::count_syllables;
use crate::vad::{detect_voice_activity, VadParams};

pub const DEFAULT_SIZES_S: [f64; 6] = [1.0, 5.0, 10.0, 15.0, 30.0, 60.0];
pub const DEFAULT_REPEATS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Intensity,
    Pitch,
    VoiceActivity,
    SpeechRate,
    All,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Self::Intensity, Self::Pitch, Self::VoiceActivity, Self::SpeechRate, Self::All];

    pub fn name(self) -> &'static str {
        match self {
            Self::Intensity => "intensity",
            Self::Pitch => "pitch",
            Self::VoiceActivity => "voice_activity",
            Self::SpeechRate => "speech_rate",
            Self::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timing {
    pub mean_s: f64,
    pub std_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub window_s: f64,
    /// Indexed like [`Stage::ALL`].
    pub stages: [Timing; 5],
}

impl BenchRow {
    pub fn get(&self, stage: Stage) -> Timing {
        self.stages[Stage::ALL.iter().position(|&s| s == stage).expect("listed stage")]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub repeats: usize,
    pub rows: Vec<BenchRow>,
    /// Total time against window size.
    pub fit: LinearFit,
}

fn time_stage(stage: Stage, win: &AudioWindow, cfg: &AnalysisConfig, vad: &VadParams, pipeline: &Pipeline) -> Result<f64> {
    // Inputs a stage consumes but does not own, computed outside the clock.
    let rms = frame_rms(win, cfg);
    let zcr = frame_zcr(win, cfg);
    let pitch = pitch_track(win, &rms, cfg)?;
    let energy = frame_energy(win, cfg);
    let flags = detect_voice_activity(&energy, &zcr, &pitch, vad)?;

    let start = Instant::now();
    match stage {
        Stage::Intensity => {
            let rms = frame_rms(win, cfg);
            std::hint::black_box(summarize(&rms)?);
        }
        Stage::Pitch => {
            let p = pitch_track(win, &rms, cfg)?;
            let gated = gate_by_vad(&p, &flags.flags, cfg)?;
            std::hint::black_box(summarize(&gated)?);
        }
        Stage::VoiceActivity => {
            let energy = frame_energy(win, cfg);
            let zcr = frame_zcr(win, cfg);
            std::hint::black_box(detect_voice_activity(&energy, &zcr, &pitch, vad)?);
        }
        Stage::SpeechRate => {
            let zcr = frame_zcr(win, cfg);
            std::hint::black_box(count_syllables(&rms, &zcr, &pitch, cfg)?);
        }
        Stage::All => {
            std::hint::black_box(pipeline.analyze(win)?);
        }
    }
    Ok(start.elapsed().as_secs_f64())
}

fn mean_std(v: &[f64]) -> Timing {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Timing {
        mean_s: mean,
        std_s: var.sqrt(),
    }
}

/// Time every stage on each window size. `audio` must be mono and at
/// least as long as the largest size.
pub fn run_bench(audio: &AudioBuffer, sizes_s: &[f64], repeats: usize, vad: &VadParams) -> Result<BenchReport> {
    if sizes_s.is_empty() || repeats == 0 {
        return Err(Error::Config("bench needs at least one size and one repeat".into()));
    }
    let mono = crate::audio::to_mono(audio);
    let rate = mono.sample_rate();
    let mut rows = Vec::with_capacity(sizes_s.len());
    for &size in sizes_s {
        let cfg = AnalysisConfig::default().with_window_s(size, 1.0);
        cfg.validate()?;
        let len = cfg.window_samples(rate);
        if mono.frames() < len {
            return Err(Error::Data(format!(
                "audio of {:.1} s is shorter than the {size} s window",
                mono.duration_s()
            )));
        }
        let win = AudioWindow::new(mono.samples()[..len].to_vec(), rate, 0.0);
        let pipeline = Pipeline::new(cfg, *vad, FeatureSet::Base)?;
        let mut stages = [Timing::default(); 5];
        for (slot, &stage) in stages.iter_mut().zip(Stage::ALL.iter()) {
            time_stage(stage, &win, &cfg, vad, &pipeline)?;
            let samples = (0..repeats)
                .map(|_| time_stage(stage, &win, &cfg, vad, &pipeline))
                .collect::<Result<Vec<_>>>()?;
            *slot = mean_std(&samples);
        }
        log::info!("bench {size} s window: total {:.4} s", stages[4].mean_s);
        rows.push(BenchRow { window_s: size, stages });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.window_s).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.get(Stage::All).mean_s).collect();
    let fit = linear_fit(&x, &y).unwrap_or(LinearFit {
        slope: 0.0,
        intercept: y[0],
        r_squared: 1.0,
    });
    Ok(BenchReport { repeats, rows, fit })
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("window_s");
        for s in Stage::ALL {
            let _ = write!(out, ",{0}_mean_s,{0}_std_s", s.name());
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{}", r.window_s);
            for t in r.stages {
                let _ = write!(out, ",{},{}", t.mean_s, t.std_s);
            }
            out.push('\n');
        }
        out
    }

    /// Mean (std) seconds per stage, one row per window size.
    pub fn to_text(&self) -> String {
        let mut out = format!("feature extraction run time, {} repeats, seconds: mean (std)\n", self.repeats);
        let _ = write!(out, "{:>8}", "window");
        for s in Stage::ALL {
            let _ = write!(out, " {:>22}", s.name());
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:>7}s", r.window_s);
            for t in r.stages {
                let _ = write!(out, " {:>22}", format!("{:.4} ({:.4})", t.mean_s, t.std_s));
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "total = {:.5} s/s x window + {:.5} s, R^2 = {:.4}",
            self.fit.slope, self.fit.intercept, self.fit.r_squared
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fit_recovers_a_line() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 0.5).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!((f.intercept - 0.5).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn short_audio_is_rejected() {
        let buf = AudioBuffer::mono(vec![0.0; 16000], 16000).unwrap();
        assert!(run_bench(&buf, &[5.0], 1, &VadParams::default()).is_err());
    }

    #[test]
    fn small_bench_produces_rows() {
        let s = crate::synth::conversation(1, 8000, 2.0).unwrap();
        let r = run_bench(&s.audio, &[1.0, 2.0], 1, &VadParams::default()).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.to_text().contains("pitch"));
        assert_eq!(r.to_csv().lines().count(), 3);
    }
}

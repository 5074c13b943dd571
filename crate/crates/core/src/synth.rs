//! Deterministic synthetic audio with known ground truth.
//!
//! Voiced speech is a Rosenberg glottal-flow pulse train. Vowels use the
//! derivative of that flow through two second-order resonators placed at
//! F1 and F2. Everything is seeded, so a scenario name and a seed identify
//! the exact samples.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::framing::{AnalysisConfig, FrameGrid};

/// Opening and closing phases of a glottal cycle, as fractions of a period.
const OPEN_PHASE: f64 = 0.4;
const CLOSE_PHASE: f64 = 0.16;
const F1_BANDWIDTH_HZ: f64 = 60.0;
const F2_BANDWIDTH_HZ: f64 = 90.0;

fn len(rate: u32, dur_s: f64) -> usize {
    (dur_s * f64::from(rate)).round() as usize
}

pub fn sine(freq: f64, amp: f64, rate: u32, dur_s: f64) -> Vec<f64> {
    let w = 2.0 * PI * freq / f64::from(rate);
    (0..len(rate, dur_s)).map(|i| amp * (w * i as f64).sin()).collect()
}

/// Square wave starting mid-phase, so no sample sits exactly on an edge.
pub fn square(freq: f64, amp: f64, rate: u32, dur_s: f64) -> Vec<f64> {
    let w = 2.0 * PI * freq / f64::from(rate);
    (0..len(rate, dur_s))
        .map(|i| if (w * i as f64).cos() >= 0.0 { amp } else { -amp })
        .collect()
}

pub fn gaussian_noise(std_dev: f64, rate: u32, dur_s: f64, rng: &mut impl Rng) -> Vec<f64> {
    let dist = Normal::new(0.0, std_dev.max(0.0)).expect("finite std");
    (0..len(rate, dur_s)).map(|_| dist.sample(rng)).collect()
}

/// Zero-mean Rosenberg glottal flow at `f0`, peak-to-peak about `amp`.
pub fn glottal_flow(f0: f64, amp: f64, rate: u32, dur_s: f64) -> Vec<f64> {
    let dc = OPEN_PHASE / 2.0 + 2.0 * CLOSE_PHASE / PI;
    (0..len(rate, dur_s))
        .map(|i| {
            let p = (i as f64 * f0 / f64::from(rate)).fract();
            let g = if p < OPEN_PHASE {
                0.5 * (1.0 - (PI * p / OPEN_PHASE).cos())
            } else if p < OPEN_PHASE + CLOSE_PHASE {
                (PI * (p - OPEN_PHASE) / (2.0 * CLOSE_PHASE)).cos()
            } else {
                0.0
            };
            amp * (g - dc)
        })
        .collect()
}

/// Two-pole resonator with unity gain at DC.
pub fn resonator(x: &[f64], freq: f64, bandwidth: f64, rate: u32) -> Vec<f64> {
    let rate = f64::from(rate);
    let c = -(-2.0 * PI * bandwidth / rate).exp();
    let b = 2.0 * (-PI * bandwidth / rate).exp() * (2.0 * PI * freq / rate).cos();
    let a = 1.0 - b - c;
    let (mut y1, mut y2) = (0.0, 0.0);
    x.iter()
        .map(|&v| {
            let y = a * v + b * y1 + c * y2;
            y2 = y1;
            y1 = y;
            y
        })
        .collect()
}

/// Sustained vowel with formants at `f1` and `f2`, scaled to peak `amp`.
pub fn vowel(f0: f64, f1: f64, f2: f64, amp: f64, rate: u32, dur_s: f64) -> Vec<f64> {
    let flow = glottal_flow(f0, 1.0, rate, dur_s);
    let mut prev = 0.0;
    let source: Vec<f64> = flow
        .iter()
        .map(|&g| {
            let d = g - prev;
            prev = g;
            d
        })
        .collect();
    let mut y = resonator(&resonator(&source, f1, F1_BANDWIDTH_HZ, rate), f2, F2_BANDWIDTH_HZ, rate);
    normalize_peak(&mut y, amp);
    y
}

pub fn normalize_peak(x: &mut [f64], amp: f64) {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v *= amp / peak);
    }
}

/// Multiply by a raised-cosine envelope rising and falling over `ramp` samples.
pub fn apply_ramps(x: &mut [f64], ramp: usize) {
    let n = x.len();
    let ramp = ramp.min(n / 2);
    for i in 0..ramp {
        let g = 0.5 * (1.0 - (PI * i as f64 / ramp as f64).cos());
        x[i] *= g;
        x[n - 1 - i] *= g;
    }
}

/// Multiply by a full Hann envelope.
pub fn apply_hann(x: &mut [f64]) {
    let n = x.len();
    if n < 2 {
        return;
    }
    for (i, v) in x.iter_mut().enumerate() {
        *v *= 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos());
    }
}

fn add_at(dst: &mut [f64], src: &[f64], at: usize) {
    let at = at.min(dst.len());
    for (d, s) in dst[at..].iter_mut().zip(src) {
        *d += s;
    }
}

/// Synthetic audio plus the time spans that hold voiced sound.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub audio: AudioBuffer,
    /// Voiced spans in seconds, sorted and disjoint.
    pub segments: Vec<(f64, f64)>,
    pub f0: f64,
}

impl Scenario {
    /// Per-frame truth: a frame is voiced when its midpoint lies in a segment.
    pub fn frame_truth(&self, cfg: &AnalysisConfig) -> Vec<bool> {
        let rate = self.audio.sample_rate();
        let grid = FrameGrid::new(cfg, rate);
        (0..grid.count(self.audio.frames()))
            .map(|i| {
                let (s, e) = grid.bounds(i);
                let mid = (s + e) as f64 / 2.0 / f64::from(rate);
                self.segments.iter().any(|&(a, b)| a <= mid && mid < b)
            })
            .collect()
    }

    pub fn occupancy(&self, cfg: &AnalysisConfig) -> f64 {
        let t = self.frame_truth(cfg);
        t.iter().filter(|&&v| v).count() as f64 / t.len().max(1) as f64
    }

    pub fn syllable_count(&self) -> usize {
        self.segments.len()
    }
}

/// Background noise level used under every scenario.
pub const NOISE_FLOOR: f64 = 0.002;
/// Range of glottal-flow amplitudes for synthetic talkers, a normal
/// recording level.
pub const SPEECH_PEAK: (f64, f64) = (0.05, 0.2);
/// Leading stretch kept free of speech so the detector can learn the floor.
pub const LEAD_SILENCE_S: f64 = 0.4;

fn noise_bed(rng: &mut ChaCha8Rng, rate: u32, dur_s: f64) -> Vec<f64> {
    gaussian_noise(NOISE_FLOOR, rate, dur_s, rng)
}

fn finish(samples: Vec<f64>, rate: u32, segments: Vec<(f64, f64)>, f0: f64) -> Result<Scenario> {
    Ok(Scenario {
        audio: AudioBuffer::mono(samples, rate)?,
        segments,
        f0,
    })
}

/// Shortest noise gap between speech stretches in [`speech_window`].
pub const MIN_PAUSE_S: f64 = 0.25;

/// A window of noise with one to three glottal-pulse speech stretches
/// covering `occupancy` of it, separated by at least [`MIN_PAUSE_S`].
pub fn speech_window(seed: u64, rate: u32, dur_s: f64, occupancy: f64) -> Result<Scenario> {
    if !(0.0..=1.0).contains(&occupancy) {
        return Err(Error::Config("occupancy must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = rng.random_range(100.0..160.0);
    let mut out = noise_bed(&mut rng, rate, dur_s);
    let usable = dur_s - LEAD_SILENCE_S - 0.1;
    let total = occupancy * dur_s;
    let mut pieces = if total < 0.6 { 1 } else { rng.random_range(1..=3usize) };
    while pieces > 1 && total + (pieces - 1) as f64 * MIN_PAUSE_S > usable {
        pieces -= 1;
    }
    if total > usable {
        return Err(Error::Config(format!("occupancy {occupancy} does not fit in {dur_s} s")));
    }
    let piece = total / pieces as f64;
    let slack = usable - total - (pieces - 1) as f64 * MIN_PAUSE_S;
    let mut cuts: Vec<f64> = (0..pieces).map(|_| rng.random_range(0.0..=slack)).collect();
    cuts.sort_by(f64::total_cmp);
    let mut segments = Vec::new();
    for (k, cut) in cuts.iter().enumerate() {
        if piece <= 0.0 {
            break;
        }
        let start = LEAD_SILENCE_S + cut + k as f64 * (piece + MIN_PAUSE_S);
        let amp = rng.random_range(SPEECH_PEAK.0..SPEECH_PEAK.1);
        let mut voiced = glottal_flow(f0, amp, rate, piece);
        apply_ramps(&mut voiced, len(rate, 0.01));
        add_at(&mut out, &voiced, len(rate, start));
        segments.push((start, start + piece));
    }
    finish(out, rate, segments, f0)
}

/// `count` voiced bursts of `burst_s` seconds, each under a Hann envelope,
/// separated by at least `min_gap_s` of noise.
pub fn syllable_window(seed: u64, rate: u32, dur_s: f64, count: usize, burst_s: f64, min_gap_s: f64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = rng.random_range(100.0..160.0);
    let mut out = noise_bed(&mut rng, rate, dur_s);
    let usable = dur_s - LEAD_SILENCE_S - 0.1;
    let needed = count as f64 * (burst_s + min_gap_s);
    if needed > usable {
        return Err(Error::Config(format!("{count} bursts do not fit in {dur_s} s")));
    }
    let slack = usable - needed;
    let mut cuts: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..=slack)).collect();
    cuts.sort_by(f64::total_cmp);
    let mut segments = Vec::new();
    for (k, cut) in cuts.iter().enumerate() {
        let start = LEAD_SILENCE_S + cut + k as f64 * (burst_s + min_gap_s);
        let amp = rng.random_range(SPEECH_PEAK.0..SPEECH_PEAK.1);
        let mut burst = glottal_flow(f0, amp, rate, burst_s);
        apply_hann(&mut burst);
        add_at(&mut out, &burst, len(rate, start));
        segments.push((start, start + burst_s));
    }
    finish(out, rate, segments, f0)
}

/// A sustained vowel of `vowel_s` seconds starting after the lead silence.
pub fn vowel_window(seed: u64, rate: u32, dur_s: f64, vowel_s: f64, f1: f64, f2: f64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = 120.0;
    let mut out = noise_bed(&mut rng, rate, dur_s);
    let start = LEAD_SILENCE_S + 0.6;
    let mut v = vowel(f0, f1, f2, 0.4, rate, vowel_s);
    apply_ramps(&mut v, len(rate, 0.01));
    add_at(&mut out, &v, len(rate, start));
    finish(out, rate, vec![(start, start + vowel_s)], f0)
}

/// Syllables of the same vowel run together with no closure between them.
pub fn run_on_syllables(seed: u64, rate: u32, dur_s: f64, syllables: usize, syllable_s: f64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = 120.0;
    let mut out = noise_bed(&mut rng, rate, dur_s);
    let start = LEAD_SILENCE_S + 0.6;
    let total = syllables as f64 * syllable_s;
    let mut v = vowel(f0, 500.0, 1000.0, 0.4, rate, total);
    // Shallow amplitude dips mark syllable boundaries but never reach silence.
    let per = len(rate, syllable_s);
    for (i, s) in v.iter_mut().enumerate() {
        let phase = (i % per) as f64 / per as f64;
        *s *= 0.75 + 0.25 * (PI * phase).sin();
    }
    apply_ramps(&mut v, len(rate, 0.01));
    add_at(&mut out, &v, len(rate, start));
    finish(out, rate, vec![(start, start + total)], f0)
}

/// A long recording alternating speech and pauses, for streaming tests.
pub fn conversation(seed: u64, rate: u32, dur_s: f64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = rng.random_range(100.0..180.0);
    let mut out = noise_bed(&mut rng, rate, dur_s);
    let mut segments = Vec::new();
    let mut t = LEAD_SILENCE_S;
    while t < dur_s - 0.5 {
        let talk = rng.random_range(0.3..2.5f64).min(dur_s - t - 0.1);
        let amp = rng.random_range(SPEECH_PEAK.0..SPEECH_PEAK.1);
        let mut v = glottal_flow(f0 * rng.random_range(0.9..1.1), amp, rate, talk);
        apply_ramps(&mut v, len(rate, 0.01));
        add_at(&mut out, &v, len(rate, t));
        segments.push((t, t + talk));
        t += talk + rng.random_range(0.5..3.0);
    }
    finish(out, rate, segments, f0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::zero_crossing_rate;

    #[test]
    fn glottal_flow_is_zero_mean_with_two_crossings_per_period() {
        let x = glottal_flow(100.0, 1.0, 16000, 1.0);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!(mean.abs() < 1e-3, "{mean}");
        let z = zero_crossing_rate(&x);
        assert!((z - 200.0 / 16000.0).abs() < 2e-4, "{z}");
    }

    #[test]
    fn resonator_has_unit_dc_gain() {
        let y = resonator(&vec![1.0; 4000], 500.0, 60.0, 16000);
        assert!((y[3999] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn scenarios_are_reproducible() {
        let a = speech_window(3, 16000, 5.0, 0.5).unwrap();
        let b = speech_window(3, 16000, 5.0, 0.5).unwrap();
        assert_eq!(a.audio, b.audio);
        assert_eq!(a.segments, b.segments);
        let occ = a.occupancy(&AnalysisConfig::default());
        assert!((occ - 0.5).abs() < 0.05, "{occ}");
    }

    #[test]
    fn syllable_bursts_do_not_overlap() {
        let s = syllable_window(9, 16000, 5.0, 6, 0.15, 0.4).unwrap();
        assert_eq!(s.syllable_count(), 6);
        for w in s.segments.windows(2) {
            assert!(w[1].0 - w[0].1 >= 0.4 - 1e-9);
        }
        assert!(s.segments[0].0 >= LEAD_SILENCE_S);
        assert!(syllable_window(9, 16000, 5.0, 20, 0.15, 0.4).is_err());
    }
}

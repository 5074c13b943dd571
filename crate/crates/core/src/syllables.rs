//! Speaking rate from voiced intensity peaks.
//!
//! Peaks of the RMS track are found with the usual local-maximum rules
//! (flat tops resolve to their middle sample), thinned so survivors are at
//! least [`MIN_PEAK_DISTANCE`] frames apart with the taller peak winning,
//! and kept only when their width at half prominence is at least
//! [`MIN_PEAK_WIDTH`] frames. A surviving peak is a syllable when its
//! zero-crossing rate is below [`MAX_SYLLABLE_ZCR`] and some frame within
//! [`PITCH_MARGIN`] carries pitch.

use crate::error::{Error, Result};
use crate::features::FrameTrack;
use crate::framing::AnalysisConfig;
use crate::pitch::{any_within, nonzero_prefix, PitchTrack};

pub const MIN_PEAK_WIDTH: f64 = 2.0;
pub const MIN_PEAK_DISTANCE: usize = 4;
pub const MAX_SYLLABLE_ZCR: f64 = 0.06;
pub const PITCH_MARGIN: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SyllableResult {
    pub peak_frames: Vec<usize>,
    /// Syllables per second of window.
    pub rate: f64,
}

impl SyllableResult {
    pub fn count(&self) -> usize {
        self.peak_frames.len()
    }
}

/// Indices of strict local maxima; a plateau reports its middle index.
pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut peaks = Vec::new();
    if x.len() < 3 {
        return peaks;
    }
    let last = x.len() - 1;
    let mut i = 1;
    while i < last {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead < last && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                peaks.push((i + ahead - 1) / 2);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    peaks
}

/// Drop peaks closer than `distance` to a taller one. Equal heights keep
/// the earlier peak.
pub fn select_by_distance(x: &[f64], peaks: &[usize], distance: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by(|&a, &b| x[peaks[b]].total_cmp(&x[peaks[a]]).then(a.cmp(&b)));
    let mut keep = vec![true; peaks.len()];
    for &idx in &order {
        if !keep[idx] {
            continue;
        }
        let p = peaks[idx];
        let mut j = idx;
        while j > 0 && p - peaks[j - 1] < distance {
            j -= 1;
            keep[j] = false;
        }
        let mut j = idx + 1;
        while j < peaks.len() && peaks[j] - p < distance {
            keep[j] = false;
            j += 1;
        }
    }
    peaks.iter().zip(keep).filter_map(|(&p, k)| k.then_some(p)).collect()
}

/// Prominence of a peak and the bases it was measured from.
fn prominence(x: &[f64], peak: usize) -> (f64, usize, usize) {
    let h = x[peak];
    let mut left_base = peak;
    let mut left_min = h;
    let mut i = peak;
    while i > 0 && x[i - 1] <= h {
        i -= 1;
        if x[i] < left_min {
            left_min = x[i];
            left_base = i;
        }
    }
    let mut right_base = peak;
    let mut right_min = h;
    let mut i = peak;
    while i + 1 < x.len() && x[i + 1] <= h {
        i += 1;
        if x[i] < right_min {
            right_min = x[i];
            right_base = i;
        }
    }
    (h - left_min.max(right_min), left_base, right_base)
}

/// Interpolated width of a peak at half its prominence.
pub fn half_prominence_width(x: &[f64], peak: usize) -> f64 {
    let (prom, left_base, right_base) = prominence(x, peak);
    let line = x[peak] - 0.5 * prom;

    let mut i = peak;
    while left_base < i && line < x[i] {
        i -= 1;
    }
    let mut left = i as f64;
    if x[i] < line {
        left += (line - x[i]) / (x[i + 1] - x[i]);
    }

    let mut i = peak;
    while i < right_base && line < x[i] {
        i += 1;
    }
    let mut right = i as f64;
    if x[i] < line {
        right -= (line - x[i]) / (x[i - 1] - x[i]);
    }
    right - left
}

/// Peaks at least [`MIN_PEAK_DISTANCE`] apart and [`MIN_PEAK_WIDTH`] wide.
pub fn intensity_peaks(rms: &[f64]) -> Vec<usize> {
    let peaks = local_maxima(rms);
    let peaks = select_by_distance(rms, &peaks, MIN_PEAK_DISTANCE);
    peaks
        .into_iter()
        .filter(|&p| half_prominence_width(rms, p) >= MIN_PEAK_WIDTH)
        .collect()
}

pub fn count_syllables(
    rms: &FrameTrack,
    zcr: &FrameTrack,
    pitch: &PitchTrack,
    cfg: &AnalysisConfig,
) -> Result<SyllableResult> {
    if rms.is_empty() {
        return Err(Error::Empty("syllable detection needs at least one frame"));
    }
    rms.ensure_same_grid(zcr)?;
    rms.ensure_same_grid(pitch)?;
    let voiced = nonzero_prefix(&pitch.values);
    let peak_frames: Vec<usize> = intensity_peaks(&rms.values)
        .into_iter()
        .filter(|&m| zcr.values[m] < MAX_SYLLABLE_ZCR && any_within(&voiced, m, PITCH_MARGIN))
        .collect();
    let rate = peak_frames.len() as f64 / cfg.window_duration_s();
    Ok(SyllableResult { peak_frames, rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::TrackKind;
    use proptest::prelude::*;

    fn tr(kind: TrackKind, v: Vec<f64>) -> FrameTrack {
        FrameTrack::new(kind, v, &AnalysisConfig::default())
    }

    fn bump(n: usize, centers: &[usize], half_width: f64) -> Vec<f64> {
        (0..n)
            .map(|i| {
                centers
                    .iter()
                    .map(|&c| (-((i as f64 - c as f64) / half_width).powi(2)).exp())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn local_maxima_handles_plateaus() {
        assert_eq!(local_maxima(&[0.0, 1.0, 0.0]), vec![1]);
        assert_eq!(local_maxima(&[0.0, 1.0, 1.0, 1.0, 0.0]), vec![2]);
        assert_eq!(local_maxima(&[0.0, 1.0, 1.0, 2.0, 0.0]), vec![3]);
        assert!(local_maxima(&[1.0, 1.0, 1.0]).is_empty());
        assert!(local_maxima(&[0.0, 1.0, 2.0]).is_empty());
    }

    #[test]
    fn distance_keeps_taller_then_earlier() {
        let x = [0.0, 2.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0, 3.0, 0.0];
        let peaks = local_maxima(&x);
        assert_eq!(peaks, vec![1, 3, 8, 10]);
        assert_eq!(select_by_distance(&x, &peaks, 4), vec![3, 8]);
    }

    #[test]
    fn width_of_triangle() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0, 0.0];
        assert!((half_prominence_width(&x, 4) - 4.0).abs() < 1e-12);
        // A one-frame spike is too narrow to count.
        let spike = [0.0, 0.0, 5.0, 0.0, 0.0];
        assert!(half_prominence_width(&spike, 2) < MIN_PEAK_WIDTH);
        assert!(intensity_peaks(&spike).is_empty());
    }

    #[test]
    fn silence_has_no_syllables() {
        let cfg = AnalysisConfig::default();
        let n = 496;
        let r = count_syllables(
            &tr(TrackKind::Rms, vec![0.0; n]),
            &tr(TrackKind::Zcr, vec![0.0; n]),
            &tr(TrackKind::PitchHz, vec![0.0; n]),
            &cfg,
        )
        .unwrap();
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn voiced_bumps_count() {
        let cfg = AnalysisConfig::default();
        let n = 496;
        let rms = bump(n, &[100, 200, 300], 5.0);
        let mut pitch = vec![0.0; n];
        for c in [100, 200, 300] {
            for p in &mut pitch[c - 5..c + 5] {
                *p = 120.0;
            }
        }
        let r = count_syllables(
            &tr(TrackKind::Rms, rms.clone()),
            &tr(TrackKind::Zcr, vec![0.02; n]),
            &tr(TrackKind::PitchHz, pitch),
            &cfg,
        )
        .unwrap();
        assert_eq!(r.peak_frames, vec![100, 200, 300]);
        assert!((r.rate - 0.6).abs() < 1e-12);

        let mut zcr = vec![0.02; n];
        zcr[200] = 0.08;
        let r = count_syllables(
            &tr(TrackKind::Rms, rms),
            &tr(TrackKind::Zcr, zcr),
            &tr(TrackKind::PitchHz, vec![120.0; n]),
            &cfg,
        )
        .unwrap();
        assert_eq!(r.peak_frames, vec![100, 300]);
    }

    #[test]
    fn grid_mismatch_and_empty() {
        let cfg = AnalysisConfig::default();
        let a = tr(TrackKind::Rms, vec![0.0; 5]);
        let b = tr(TrackKind::Zcr, vec![0.0; 6]);
        assert!(count_syllables(&a, &b, &a, &cfg).is_err());
        let e = tr(TrackKind::Rms, vec![]);
        assert!(matches!(count_syllables(&e, &e, &e, &cfg), Err(Error::Empty(_))));
    }

    proptest! {
        #[test]
        fn invariants(
            rms in proptest::collection::vec(0.0f64..1.0, 1..500),
            voiced in any::<bool>(),
            c in prop_oneof![Just(2.0f64), Just(0.5), Just(4.0)],
        ) {
            let cfg = AnalysisConfig::default();
            let n = rms.len();
            let pitch = tr(TrackKind::PitchHz, vec![if voiced { 150.0 } else { 0.0 }; n]);
            let zcr = tr(TrackKind::Zcr, vec![0.01; n]);
            let r = count_syllables(&tr(TrackKind::Rms, rms.clone()), &zcr, &pitch, &cfg).unwrap();
            prop_assert!(r.rate >= 0.0);
            prop_assert!(r.rate <= (n as f64 / 4.0 + 1.0) / cfg.window_duration_s());
            for w in r.peak_frames.windows(2) {
                prop_assert!(w[1] - w[0] >= MIN_PEAK_DISTANCE);
            }
            if !voiced {
                prop_assert_eq!(r.count(), 0);
            }
            let scaled: Vec<f64> = rms.iter().map(|v| v * c).collect();
            let r2 = count_syllables(&tr(TrackKind::Rms, scaled), &zcr, &pitch, &cfg).unwrap();
            prop_assert_eq!(r.peak_frames, r2.peak_frames);
        }
    }
}

// Track the pitch of a pure tone and of a glottal pulse train.

use speech_workload::features::frame_rms;
use speech_workload::framing::{AnalysisConfig, AudioWindow};
use speech_workload::pitch::pitch_track;
use speech_workload::synth;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = AnalysisConfig::default();
    let rate = 16000;
    let signals = [
        ("sine 180 Hz", synth::sine(180.0, 0.5, rate, 5.0)),
        ("pulses 120 Hz", synth::glottal_flow(120.0, 0.2, rate, 5.0)),
        ("sine 500 Hz", synth::sine(500.0, 0.5, rate, 5.0)),
    ];
    for (name, samples) in signals {
        let win = AudioWindow::new(samples, rate, 0.0);
        let track = pitch_track(&win, &frame_rms(&win, &cfg), &cfg)?;
        let voiced: Vec<f64> = track.values.iter().copied().filter(|&v| v > 0.0).collect();
        let mean = if voiced.is_empty() { 0.0 } else { voiced.iter().sum::<f64>() / voiced.len() as f64 };
        println!("{name}: {} of {} frames voiced, mean {mean:.1} Hz", voiced.len(), track.len());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}

// Detect voice activity in synthetic speech with known occupancy.

use speech_workload::features::{frame_energy, frame_rms, frame_zcr};
use speech_workload::framing::{AnalysisConfig, AudioWindow};
use speech_workload::pitch::pitch_track;
use speech_workload::synth;
use speech_workload::vad::{detect_voice_activity, VadParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = AnalysisConfig::default();
    let rate = 16000;
    for (seed, occupancy) in [(1, 0.2), (2, 0.5), (3, 0.8)] {
        let s = synth::speech_window(seed, rate, 5.0, occupancy)?;
        let win = AudioWindow::new(s.audio.samples().to_vec(), rate, 0.0);
        let pitch = pitch_track(&win, &frame_rms(&win, &cfg), &cfg)?;
        let vad = detect_voice_activity(&frame_energy(&win, &cfg), &frame_zcr(&win, &cfg), &pitch, &VadParams::default())?;
        println!(
            "true occupancy {:.3}, detected {:.3} (std {:.3})",
            s.occupancy(&cfg),
            vad.mean,
            vad.std_dev
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}

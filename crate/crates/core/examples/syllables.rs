// Count syllables in windows of voiced bursts.

use speech_workload::framing::{AnalysisConfig, AudioWindow};
use speech_workload::model::FeatureSet;
use speech_workload::pipeline::Pipeline;
use speech_workload::synth;
use speech_workload::vad::VadParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rate = 16000;
    let pipeline = Pipeline::new(AnalysisConfig::default(), VadParams::default(), FeatureSet::Base)?;
    for count in 1..=6 {
        let s = synth::syllable_window(count as u64, rate, 5.0, count, 0.25, 0.3)?;
        let a = pipeline.analyze(&AudioWindow::new(s.audio.samples().to_vec(), rate, 0.0))?;
        let found = a.syllables.map_or(0, |r| r.count());
        println!("{count} bursts -> {found} syllables ({:.1} per second)", found as f64 / 5.0);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}

// Filler detection on sustained vowels and on run-on syllables.

use speech_workload::framing::{AnalysisConfig, AudioWindow};
use speech_workload::model::FeatureSet;
use speech_workload::pipeline::Pipeline;
use speech_workload::synth;
use speech_workload::vad::VadParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rate = 44100;
    let pipeline = Pipeline::new(AnalysisConfig::default(), VadParams::default(), FeatureSet::Fillers)?;
    let cases = [
        ("400 ms \"uh\"", synth::vowel_window(1, rate, 5.0, 0.4, 500.0, 1000.0)?),
        ("180 ms \"uh\"", synth::vowel_window(2, rate, 5.0, 0.18, 500.0, 1000.0)?),
        ("400 ms \"ee\"", synth::vowel_window(3, rate, 5.0, 0.4, 400.0, 2200.0)?),
        ("run-on syllables", synth::run_on_syllables(4, rate, 5.0, 4, 0.15)?),
    ];
    for (name, s) in cases {
        let a = pipeline.analyze(&AudioWindow::new(s.audio.samples().to_vec(), rate, 0.0))?;
        let fillers = a.fillers.map_or(0, |f| f.count_per_window);
        println!("{name}: {fillers} filler(s)");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}

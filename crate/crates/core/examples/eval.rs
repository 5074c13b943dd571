// Leave-one-participant-out evaluation on synthetic participants.

use speech_workload::dataset::WindowRecord;
use speech_workload::eval::run_loso;
use speech_workload::framing::AnalysisConfig;
use speech_workload::model::{FeatureSet, TrainConfig};
use speech_workload::pipeline::Pipeline;
use speech_workload::synth;
use speech_workload::vad::VadParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rate = 16000;
    let pipeline = Pipeline::new(AnalysisConfig::default(), VadParams::default(), FeatureSet::Base)?;
    let mut rows = Vec::new();
    for p in 0..4u64 {
        let s = synth::conversation(p, rate, 30.0)?;
        for (start, vad_mean, fv) in pipeline.extract_all(s.audio.samples(), rate)? {
            let high = start >= 15.0;
            rows.push(WindowRecord {
                participant_id: format!("p{p}"),
                paradigm: "synthetic".into(),
                condition: if high { "high" } else { "low" }.into(),
                start_s: start,
                vad_mean,
                feature_set: FeatureSet::Base,
                features: fv.map(|f| f.values().to_vec()),
                label: Some(if high { 3.0 } else { 1.0 }),
            });
        }
    }
    let tc = TrainConfig {
        epochs: 20,
        ..TrainConfig::default()
    };
    let report = run_loso(&rows, FeatureSet::Base, &tc)?;
    print!("{}", report.to_text());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}

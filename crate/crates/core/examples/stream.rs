// Stream a recording in small chunks and report per-window latency.

use speech_workload::audio::BufferChunks;
use speech_workload::framing::AnalysisConfig;
use speech_workload::model::{FeatureSet, ModelParams};
use speech_workload::pipeline::Pipeline;
use speech_workload::synth;
use speech_workload::vad::VadParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let s = synth::conversation(5, 16000, 15.0)?;
    let pipeline = Pipeline::new(AnalysisConfig::default(), VadParams::default(), FeatureSet::Base)?;
    let model = ModelParams::init(&[7, 256, 256, 256, 1], FeatureSet::Base, 1)?;
    let mut source = BufferChunks::new(&s.audio, 100);
    let windows = pipeline.stream_with(&mut source, &model, |est, latency| {
        println!(
            "t={:>4.1} s  estimate {:>7.3}  voiced {:.2}  latency {:.2} ms",
            est.start_time_s,
            est.estimate,
            est.vad_mean,
            latency.as_secs_f64() * 1000.0
        );
    })?;
    println!("{windows} windows");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}

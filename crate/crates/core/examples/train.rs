// Train a model to recover voiced occupancy from extracted features.

use speech_workload::framing::{AnalysisConfig, AudioWindow};
use speech_workload::model::{train, FeatureSet, ModelParams, Sample, TrainConfig};
use speech_workload::pipeline::Pipeline;
use speech_workload::synth;
use speech_workload::vad::VadParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rate = 16000;
    let cfg = AnalysisConfig::default();
    let pipeline = Pipeline::new(cfg, VadParams::default(), FeatureSet::Base)?;
    let mut samples = Vec::new();
    for seed in 0..60u64 {
        let s = synth::speech_window(seed, rate, 5.0, 0.15 + 0.7 * seed as f64 / 59.0)?;
        let a = pipeline.analyze(&AudioWindow::new(s.audio.samples().to_vec(), rate, 0.0))?;
        if let Some(fv) = a.features {
            samples.push(Sample {
                features: fv.values().to_vec(),
                label: 4.0 * s.occupancy(&cfg),
            });
        }
    }
    let tc = TrainConfig {
        epochs: 50,
        seed: 7,
        ..TrainConfig::default()
    };
    let (model, report) = train(&samples, FeatureSet::Base, &tc)?;
    println!(
        "{} windows, loss {:.4} -> {:.4}",
        samples.len(),
        report.epoch_losses[0],
        report.epoch_losses.last().copied().unwrap_or_default()
    );

    let bytes = model.to_bytes();
    let restored = ModelParams::from_bytes_for(&bytes, FeatureSet::Base)?;
    println!("saved {} bytes, reload identical: {}", bytes.len(), restored == model);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}

// Time each feature extractor across a few window sizes.

use speech_workload::bench::run_bench;
use speech_workload::synth;
use speech_workload::vad::VadParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let audio = synth::conversation(1, 16000, 11.0)?.audio;
    let report = run_bench(&audio, &[1.0, 5.0, 10.0], 3, &VadParams::default())?;
    print!("{}", report.to_text());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}

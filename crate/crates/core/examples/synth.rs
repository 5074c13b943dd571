// Generate the synthetic scenarios and write them as WAV files.

use speech_workload::audio::write_wav;
use speech_workload::framing::AnalysisConfig;
use speech_workload::synth;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("swe-synth-example");
    std::fs::create_dir_all(&dir)?;
    let cfg = AnalysisConfig::default();
    let scenarios = [
        ("speech", synth::speech_window(1, 16000, 5.0, 0.5)?),
        ("syllables", synth::syllable_window(2, 16000, 5.0, 4, 0.25, 0.3)?),
        ("vowel", synth::vowel_window(3, 44100, 5.0, 0.4, 500.0, 1000.0)?),
        ("conversation", synth::conversation(4, 16000, 20.0)?),
    ];
    for (name, s) in scenarios {
        let path = dir.join(format!("{name}.wav"));
        write_wav(&path, &s.audio)?;
        println!(
            "{}: {:.1} s, {} voiced span(s), occupancy {:.2}",
            path.display(),
            s.audio.duration_s(),
            s.segments.len(),
            s.occupancy(&cfg)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}

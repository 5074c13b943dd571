// Encode a tone as WAV, decode it back, and read it in streaming chunks.

use speech_workload::audio::{decode_wav, encode_wav_pcm16, AudioBuffer, ChunkSource, WavStreamReader};
use speech_workload::synth;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let tone = AudioBuffer::mono(synth::sine(220.0, 0.5, 16000, 1.0), 16000)?;
    let bytes = encode_wav_pcm16(&tone);
    let decoded = decode_wav(&bytes)?;
    println!(
        "{} bytes -> {} samples at {} Hz, {} channel(s)",
        bytes.len(),
        decoded.frames(),
        decoded.sample_rate(),
        decoded.channels()
    );

    let mut reader = WavStreamReader::new(bytes.as_slice(), 250)?;
    let mut chunks = 0;
    while let Some(chunk) = reader.next_chunk()? {
        chunks += 1;
        println!("chunk {chunks}: {} samples", chunk.len());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}

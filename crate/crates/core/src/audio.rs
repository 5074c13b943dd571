//! PCM WAV decoding, mixdown, and chunked access for streaming.
//!
//! Only integer PCM at 16 or 32 bits with one or two channels is accepted.
//! Samples are normalized by the magnitude of the most negative code, so a
//! 16-bit `32767` decodes to `32767 / 32768`.

use std::fs;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

const WAVE_FORMAT_PCM: u16 = 0x0001;
const WAVE_FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Interleaved, normalized audio samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
    channels: u16,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32, channels: u16) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Data("sample rate must be positive".into()));
        }
        if !(1..=2).contains(&channels) {
            return Err(Error::UnsupportedFormat(format!("{channels} channels")));
        }
        if !samples.len().is_multiple_of(channels as usize) {
            return Err(Error::Data(format!(
                "{} samples do not divide into {channels} channels",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Data(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
            channels,
        })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::new(samples, sample_rate, 1)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> u16 {
        self.channels
    }

    /// Number of sample frames (one sample per channel).
    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels as usize
    }

    pub fn duration_s(&self) -> f64 {
        self.frames() as f64 / f64::from(self.sample_rate)
    }
}

/// Average the two channels of a stereo buffer. Mono input is returned as is.
pub fn to_mono(buf: &AudioBuffer) -> AudioBuffer {
    match buf.channels {
        1 => buf.clone(),
        _ => AudioBuffer {
            samples: mix_interleaved(&buf.samples),
            sample_rate: buf.sample_rate,
            channels: 1,
        },
    }
}

fn mix_interleaved(stereo: &[f64]) -> Vec<f64> {
    stereo.chunks_exact(2).map(|lr| (lr[0] + lr[1]) / 2.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct WavFormat {
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

impl WavFormat {
    fn bytes_per_sample(self) -> usize {
        usize::from(self.bits / 8)
    }

    fn block_align(self) -> usize {
        self.bytes_per_sample() * usize::from(self.channels)
    }

    fn decode_sample(self, b: &[u8]) -> f64 {
        match self.bits {
            16 => f64::from(i16::from_le_bytes([b[0], b[1]])) / 32768.0,
            _ => f64::from(i32::from_le_bytes([b[0], b[1], b[2], b[3]])) / 2_147_483_648.0,
        }
    }
}

fn decode_err(chunk: &str, reason: impl Into<String>) -> Error {
    Error::Decode {
        chunk: chunk.to_string(),
        reason: reason.into(),
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn check_riff_header(head: &[u8]) -> Result<()> {
    if head.len() < 12 {
        return Err(decode_err("RIFF", "file shorter than the 12-byte RIFF header"));
    }
    match &head[0..4] {
        b"RIFF" => {}
        b"RIFX" => return Err(decode_err("RIFF", "big-endian RIFX containers are not supported")),
        other => return Err(decode_err("RIFF", format!("bad magic {:?}", String::from_utf8_lossy(other)))),
    }
    if &head[8..12] != b"WAVE" {
        return Err(decode_err("RIFF", "form type is not WAVE"));
    }
    Ok(())
}

fn parse_fmt(body: &[u8]) -> Result<WavFormat> {
    if body.len() < 16 {
        return Err(decode_err("fmt ", format!("chunk is {} bytes, need at least 16", body.len())));
    }
    let mut tag = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let block_align = u16_at(body, 12);
    let bits = u16_at(body, 14);
    if tag == WAVE_FORMAT_EXTENSIBLE {
        if body.len() < 26 {
            return Err(decode_err("fmt ", "extensible format without a sub-format GUID"));
        }
        tag = u16_at(body, 24);
    }
    if tag != WAVE_FORMAT_PCM {
        return Err(Error::UnsupportedFormat(format!("compression code {tag:#06x}")));
    }
    if bits != 16 && bits != 32 {
        return Err(Error::UnsupportedFormat(format!("{bits}-bit PCM")));
    }
    if !(1..=2).contains(&channels) {
        return Err(Error::UnsupportedFormat(format!("{channels} channels")));
    }
    if sample_rate == 0 {
        return Err(decode_err("fmt ", "sample rate is zero"));
    }
    let fmt = WavFormat {
        channels,
        sample_rate,
        bits,
    };
    if usize::from(block_align) != fmt.block_align() {
        return Err(decode_err(
            "fmt ",
            format!("block align {block_align} inconsistent with {channels} x {bits}-bit"),
        ));
    }
    Ok(fmt)
}

/// Decode an in-memory RIFF/WAVE PCM file.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    check_riff_header(bytes)?;
    let mut pos = 12;
    let mut fmt: Option<WavFormat> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let id_str = String::from_utf8_lossy(id).into_owned();
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        match id {
            b"fmt " => {
                let end = body_start
                    .checked_add(size)
                    .filter(|&e| e <= bytes.len())
                    .ok_or_else(|| decode_err("fmt ", "chunk runs past end of file"))?;
                fmt = Some(parse_fmt(&bytes[body_start..end])?);
            }
            b"data" => {
                let fmt = fmt.ok_or_else(|| decode_err("data", "data chunk precedes fmt chunk"))?;
                // Streams written without a final size leave 0 or 0xFFFFFFFF here.
                let end = if size == 0 || size == u32::MAX as usize {
                    bytes.len()
                } else {
                    body_start + size
                };
                if end > bytes.len() {
                    return Err(decode_err(
                        "data",
                        format!("declares {size} bytes but only {} remain", bytes.len() - body_start),
                    ));
                }
                let body = &bytes[body_start..end];
                let align = fmt.block_align();
                if !body.len().is_multiple_of(align) {
                    return Err(decode_err(
                        "data",
                        format!("{} bytes is not a whole number of {align}-byte blocks", body.len()),
                    ));
                }
                let samples = body
                    .chunks_exact(fmt.bytes_per_sample())
                    .map(|b| fmt.decode_sample(b))
                    .collect();
                return AudioBuffer::new(samples, fmt.sample_rate, fmt.channels);
            }
            _ => {
                if body_start + size > bytes.len() {
                    return Err(decode_err(&id_str, "chunk runs past end of file"));
                }
            }
        }
        pos = body_start + size + (size & 1);
    }
    match fmt {
        None => Err(decode_err("fmt ", "missing")),
        Some(_) => Err(decode_err("data", "missing")),
    }
}

/// Read and decode a WAV file from disk.
pub fn load_pcm(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    decode_wav(&fs::read(path)?)
}

/// Encode as 16-bit PCM WAV. Samples are clamped to the representable range.
pub fn encode_wav_pcm16(buf: &AudioBuffer) -> Vec<u8> {
    let data_len = buf.samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&WAVE_FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&buf.channels.to_le_bytes());
    out.extend_from_slice(&buf.sample_rate.to_le_bytes());
    let block = u32::from(buf.channels) * 2;
    out.extend_from_slice(&(buf.sample_rate * block).to_le_bytes());
    out.extend_from_slice(&(block as u16).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in &buf.samples {
        let code = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&code.to_le_bytes());
    }
    out
}

pub fn write_wav(path: impl AsRef<Path>, buf: &AudioBuffer) -> Result<()> {
    fs::write(path, encode_wav_pcm16(buf))?;
    Ok(())
}

/// A source of mono sample blocks arriving in order.
pub trait ChunkSource {
    fn sample_rate(&self) -> u32;

    /// The next block, or `None` once the source is exhausted.
    fn next_chunk(&mut self) -> Result<Option<Vec<f64>>>;
}

/// Serves an in-memory buffer as fixed-duration mono blocks.
pub struct BufferChunks {
    samples: Vec<f64>,
    sample_rate: u32,
    chunk_len: usize,
    pos: usize,
}

impl BufferChunks {
    pub fn new(buf: &AudioBuffer, chunk_ms: u32) -> Self {
        let mono = to_mono(buf);
        let chunk_len = chunk_samples(mono.sample_rate, chunk_ms);
        Self {
            samples: mono.samples,
            sample_rate: mono.sample_rate,
            chunk_len,
            pos: 0,
        }
    }
}

fn chunk_samples(rate: u32, chunk_ms: u32) -> usize {
    ((f64::from(chunk_ms) * f64::from(rate) / 1000.0).round() as usize).max(1)
}

impl ChunkSource for BufferChunks {
    fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    fn next_chunk(&mut self) -> Result<Option<Vec<f64>>> {
        if self.pos >= self.samples.len() {
            return Ok(None);
        }
        let end = (self.pos + self.chunk_len).min(self.samples.len());
        let chunk = self.samples[self.pos..end].to_vec();
        self.pos = end;
        Ok(Some(chunk))
    }
}

/// Incrementally decodes a WAV byte stream (a pipe, a socket, a growing
/// file) into mono blocks of `chunk_ms`.
pub struct WavStreamReader<R: Read> {
    reader: R,
    fmt: WavFormat,
    remaining: Option<usize>,
    chunk_len: usize,
    done: bool,
}

impl<R: Read> WavStreamReader<R> {
    pub fn new(mut reader: R, chunk_ms: u32) -> Result<Self> {
        let mut head = [0u8; 12];
        read_exact_or(&mut reader, &mut head, "RIFF")?;
        check_riff_header(&head)?;
        let mut fmt = None;
        loop {
            let mut ch = [0u8; 8];
            read_exact_or(&mut reader, &mut ch, "data")?;
            let id = String::from_utf8_lossy(&ch[0..4]).into_owned();
            let size = u32_at(&ch, 4) as usize;
            match &ch[0..4] {
                b"fmt " => {
                    let mut body = vec![0u8; size + (size & 1)];
                    read_exact_or(&mut reader, &mut body, "fmt ")?;
                    fmt = Some(parse_fmt(&body[..size])?);
                }
                b"data" => {
                    let fmt = fmt.ok_or_else(|| decode_err("data", "data chunk precedes fmt chunk"))?;
                    let remaining = (size != 0 && size != u32::MAX as usize).then_some(size);
                    return Ok(Self {
                        reader,
                        fmt,
                        remaining,
                        chunk_len: chunk_samples(fmt.sample_rate, chunk_ms),
                        done: false,
                    });
                }
                _ => {
                    let mut skip = (&mut reader).take((size + (size & 1)) as u64);
                    let skipped = std::io::copy(&mut skip, &mut std::io::sink())?;
                    if skipped < size as u64 {
                        return Err(decode_err(&id, "chunk runs past end of stream"));
                    }
                }
            }
        }
    }

    pub fn channels(&self) -> u16 {
        self.fmt.channels
    }
}

fn read_exact_or(reader: &mut impl Read, buf: &mut [u8], chunk: &str) -> Result<()> {
    reader.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => decode_err(chunk, "stream ended inside header"),
        _ => Error::Io(e),
    })
}

impl<R: Read> ChunkSource for WavStreamReader<R> {
    fn sample_rate(&self) -> u32 {
        self.fmt.sample_rate
    }

    fn next_chunk(&mut self) -> Result<Option<Vec<f64>>> {
        if self.done {
            return Ok(None);
        }
        let align = self.fmt.block_align();
        let mut want = self.chunk_len * align;
        if let Some(rem) = self.remaining {
            want = want.min(rem);
        }
        let mut bytes = vec![0u8; want];
        let mut filled = 0;
        while filled < want {
            match self.reader.read(&mut bytes[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(Error::Source(e.to_string())),
            }
        }
        if let Some(rem) = self.remaining.as_mut() {
            *rem -= filled;
        }
        if filled < want || self.remaining == Some(0) {
            self.done = true;
        }
        let whole = filled - filled % align;
        if whole == 0 {
            return Ok(None);
        }
        let interleaved: Vec<f64> = bytes[..whole]
            .chunks_exact(self.fmt.bytes_per_sample())
            .map(|b| self.fmt.decode_sample(b))
            .collect();
        Ok(Some(match self.fmt.channels {
            1 => interleaved,
            _ => mix_interleaved(&interleaved),
        }))
    }
}

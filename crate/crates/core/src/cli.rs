//! The `swe` command line.
//!
//! Exit status is 0 on success, 2 for usage errors (unknown flags, bad
//! values, missing input files) and 1 for any other failure. Failures
//! print a single diagnostic line to stderr.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::audio::{load_pcm, to_mono, write_wav, AudioBuffer, WavStreamReader};
use crate::bench::{run_bench, DEFAULT_REPEATS, DEFAULT_SIZES_S};
use crate::config::EngineConfig;
use crate::dataset::{
    estimate_csv_line, estimate_header, estimate_json_line, load_labels, load_records, load_respiration,
    write_records, WindowRecord,
};
use crate::error::Error;
use crate::eval::{run_cross, run_emulated, run_loso, training_samples};
use crate::model::{train, FeatureSet, ModelParams};
use crate::pipeline::Pipeline;
use crate::synth;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "swe", version, about = "Estimate speech workload from audio")]
pub struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// TOML configuration file; defaults to $SWE_CONFIG when set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Analysis window length in seconds.
    #[arg(long, global = true)]
    window_s: Option<f64>,
    /// Analysis window step in seconds.
    #[arg(long, global = true)]
    step_s: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract per-window features from a recording.
    Extract {
        audio: PathBuf,
        /// Workload labels to attach to each window.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Participant whose labels apply; required when the label file holds several.
        #[arg(long)]
        participant: Option<String>,
        /// Respiration series (time_s, breaths_per_min).
        #[arg(long)]
        respiration: Option<PathBuf>,
        #[arg(long, value_parser = parse_feature_set)]
        features: Option<FeatureSet>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train a model on a features file.
    Train {
        features_csv: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_feature_set)]
        features: Option<FeatureSet>,
    },
    /// Estimate workload for every window of a recording.
    Estimate {
        audio: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Clamp estimates to the 0 to 4 label range.
        #[arg(long)]
        clamp: bool,
        /// Emit one JSON object per line instead of CSV.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        respiration: Option<PathBuf>,
    },
    /// Estimate workload from a WAV stream as windows complete.
    Stream {
        /// WAV file to read; standard input when omitted or `-`.
        input: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 100)]
        chunk_ms: u32,
        #[arg(long)]
        clamp: bool,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a model configuration on features files.
    Eval {
        #[arg(long, value_enum)]
        mode: EvalMode,
        /// Configuration whose training and feature settings are evaluated.
        #[arg(long)]
        model_config: Option<PathBuf>,
        /// Features file for loso and cross modes.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Training features file for emulated mode.
        #[arg(long)]
        train: Option<PathBuf>,
        /// Test features file for emulated mode.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, value_parser = parse_feature_set)]
        features: Option<FeatureSet>,
        /// Also write the report as CSV.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Time feature extraction across window sizes.
    Bench {
        /// Window sizes in seconds.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        sizes: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_REPEATS)]
        repeats: usize,
        /// Recording to time on; a synthetic conversation when omitted.
        #[arg(long)]
        audio: Option<PathBuf>,
        /// Also write the table as CSV.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic test recording.
    Synth {
        #[arg(value_enum)]
        scenario: Scenario,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16000)]
        rate: u32,
        #[arg(long, default_value_t = 5.0)]
        duration_s: f64,
        /// Tone frequency for sine and square.
        #[arg(long, default_value_t = 200.0)]
        freq: f64,
        /// Voiced fraction for speech.
        #[arg(long, default_value_t = 0.5)]
        occupancy: f64,
        /// Syllable count for syllables and run-on.
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalMode {
    Emulated,
    Loso,
    Cross,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scenario {
    Silence,
    Sine,
    Square,
    Noise,
    Speech,
    Syllables,
    Vowel,
    RunOn,
    Conversation,
}

fn parse_feature_set(s: &str) -> Result<FeatureSet, String> {
    FeatureSet::parse(s).ok_or_else(|| format!("unknown feature set `{s}`; use base, +resp, +fillers or +both"))
}

enum CliError {
    Usage(String),
    Failed(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Failed(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Failed(Error::Io(e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("no such file: {}", path.display())))
    }
}

/// Parse `args` (including the program name) and run. Normal output goes
/// to `out`, diagnostics to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            eprintln!("swe: {}", line.trim_start_matches("error: "));
            return EXIT_USAGE;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        // A closed downstream reader (`swe estimate ... | head`) is not a failure.
        Err(CliError::Failed(Error::Io(e))) if e.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("swe: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Failed(e)) => {
            eprintln!("swe: {e}");
            EXIT_FAILURE
        }
    }
}

fn load_config(g: &GlobalOpts) -> CliResult<EngineConfig> {
    if let Some(p) = &g.config {
        require_file(p)?;
    }
    let mut cfg = EngineConfig::resolve(g.config.as_deref())?;
    if g.window_s.is_some() || g.step_s.is_some() {
        let window = g.window_s.unwrap_or(f64::from(cfg.analysis.window_ms) / 1000.0);
        let step = g.step_s.unwrap_or(f64::from(cfg.analysis.step_ms) / 1000.0);
        if !(window > 0.0 && step > 0.0) {
            return Err(CliError::Usage("window and step must be positive".into()));
        }
        cfg.analysis = cfg.analysis.with_window_s(window, step);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn open_output(path: Option<&Path>, out: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(out),
    }
}

fn build_pipeline(cfg: &EngineConfig, set: FeatureSet, respiration: Option<&Path>) -> CliResult<Pipeline> {
    let mut p = Pipeline::new(cfg.analysis, cfg.vad, set)?;
    match respiration {
        Some(path) => {
            require_file(path)?;
            p = p.with_respiration(load_respiration(path)?);
        }
        None if set.has_respiration() => {
            return Err(CliError::Usage(format!("feature set `{set}` needs --respiration")));
        }
        None => {}
    }
    Ok(p)
}

fn execute(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = load_config(&cli.global)?;
    match cli.command {
        Command::Extract {
            audio,
            labels,
            participant,
            respiration,
            features,
            output,
        } => {
            require_file(&audio)?;
            if let Some(set) = features {
                cfg.set_feature_set(set);
            }
            let set = cfg.feature_set();
            let pipeline = build_pipeline(&cfg, set, respiration.as_deref())?;
            let series = match &labels {
                Some(p) => {
                    require_file(p)?;
                    let all = load_labels(p)?;
                    let chosen = match &participant {
                        Some(id) => all.into_iter().find(|s| &s.participant_id == id),
                        None if all.len() == 1 => all.into_iter().next(),
                        None => {
                            return Err(CliError::Usage(
                                "label file holds several participants; pass --participant".into(),
                            ))
                        }
                    };
                    Some(chosen.ok_or_else(|| Error::Data("participant not found in label file".into()))?)
                }
                None => None,
            };
            let buf = load_pcm(&audio)?;
            let mono = to_mono(&buf);
            let id = participant
                .or_else(|| series.as_ref().map(|s| s.participant_id.clone()))
                .unwrap_or_else(|| audio.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
            let rows: Vec<WindowRecord> = pipeline
                .extract_all(mono.samples(), mono.sample_rate())?
                .into_iter()
                .map(|(start, vad_mean, fv)| {
                    let point = series.as_ref().and_then(|s| s.label_at(start));
                    WindowRecord {
                        participant_id: id.clone(),
                        paradigm: series.as_ref().map(|s| s.paradigm.clone()).unwrap_or_default(),
                        condition: point.map(|p| p.condition.clone()).unwrap_or_default(),
                        start_s: start,
                        vad_mean,
                        feature_set: set,
                        features: fv.map(|f| f.values().to_vec()),
                        label: point.map(|p| p.label),
                    }
                })
                .collect();
            log::info!("extracted {} windows from {}", rows.len(), audio.display());
            let header = cfg.header_line();
            open_output(output.as_deref(), out, |w| {
                write_records(w, Some(&header), set, &rows)?;
                Ok(())
            })
        }
        Command::Train {
            features_csv,
            output,
            epochs,
            seed,
            features,
        } => {
            require_file(&features_csv)?;
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            if let Some(s) = seed {
                cfg.train.seed = s;
            }
            if let Some(set) = features {
                cfg.set_feature_set(set);
            }
            cfg.validate()?;
            let set = cfg.feature_set();
            let rows = load_records(&features_csv)?;
            let samples = training_samples(rows.iter(), set)?;
            let (model, report) = train(&samples, set, &cfg.train)?;
            model.save(&output)?;
            writeln!(out, "{}", cfg.header_line())?;
            writeln!(
                out,
                "trained `{set}` model on {} windows, {} rejected, final loss {:.6}",
                samples.len(),
                report.rejected_rows,
                report.epoch_losses.last().copied().unwrap_or(f64::NAN)
            )?;
            Ok(())
        }
        Command::Estimate {
            audio,
            model,
            clamp,
            json,
            respiration,
        } => {
            require_file(&audio)?;
            require_file(&model)?;
            let model = ModelParams::load(&model)?;
            let set = model.feature_set;
            cfg.set_feature_set(set);
            let pipeline = build_pipeline(&cfg, set, respiration.as_deref())?;
            let buf = load_pcm(&audio)?;
            let mono = to_mono(&buf);
            let estimates = pipeline.estimate_all(mono.samples(), mono.sample_rate(), &model)?;
            if !json {
                writeln!(out, "{}", cfg.header_line())?;
                writeln!(out, "{}", estimate_header(set))?;
            }
            for e in estimates {
                let e = if clamp { e.clamped(0.0, 4.0) } else { e };
                let line = if json { estimate_json_line(&e, None) } else { estimate_csv_line(&e, set) };
                writeln!(out, "{line}")?;
            }
            Ok(())
        }
        Command::Stream {
            input,
            model,
            chunk_ms,
            clamp,
            json,
        } => {
            require_file(&model)?;
            if chunk_ms == 0 {
                return Err(CliError::Usage("--chunk-ms must be positive".into()));
            }
            let model = ModelParams::load(&model)?;
            let set = model.feature_set;
            cfg.set_feature_set(set);
            let pipeline = build_pipeline(&cfg, set, None)?;
            let reader: Box<dyn io::Read> = match input.as_deref() {
                None => Box::new(io::stdin().lock()),
                Some(p) if p == Path::new("-") => Box::new(io::stdin().lock()),
                Some(p) => {
                    require_file(p)?;
                    Box::new(io::BufReader::new(File::open(p)?))
                }
            };
            let mut source = WavStreamReader::new(reader, chunk_ms)?;
            if !json {
                writeln!(out, "{}", cfg.header_line())?;
                writeln!(out, "{},latency_ms", estimate_header(set))?;
            }
            let mut write_err = None;
            pipeline.stream_with(&mut source, &model, |e, latency| {
                let e = if clamp { e.clamped(0.0, 4.0) } else { e };
                let ms = latency.as_secs_f64() * 1000.0;
                let line = if json {
                    estimate_json_line(&e, Some(ms))
                } else {
                    format!("{},{ms}", estimate_csv_line(&e, set))
                };
                if write_err.is_none() {
                    write_err = writeln!(out, "{line}").and_then(|_| out.flush()).err();
                }
            })?;
            match write_err {
                Some(e) => Err(e.into()),
                None => Ok(()),
            }
        }
        Command::Eval {
            mode,
            model_config,
            data,
            train,
            test,
            features,
            output,
        } => {
            if let Some(p) = &model_config {
                require_file(p)?;
                let mc = EngineConfig::load(p)?;
                cfg.train = mc.train;
                cfg.features = mc.features;
            }
            if let Some(set) = features {
                cfg.set_feature_set(set);
            }
            let set = cfg.feature_set();
            let need = |p: &Option<PathBuf>, flag: &str| -> CliResult<Vec<WindowRecord>> {
                let p = p
                    .as_ref()
                    .ok_or_else(|| CliError::Usage(format!("--mode {} needs {flag}", mode_name(mode))))?;
                require_file(p)?;
                Ok(load_records(p)?)
            };
            let report = match mode {
                EvalMode::Loso => run_loso(&need(&data, "--data")?, set, &cfg.train)?,
                EvalMode::Cross => run_cross(&need(&data, "--data")?, set, &cfg.train)?,
                EvalMode::Emulated => run_emulated(&need(&train, "--train")?, &need(&test, "--test")?, set, &cfg.train)?,
            };
            writeln!(out, "{}", cfg.header_line())?;
            write!(out, "{}", report.to_text())?;
            if let Some(p) = output {
                std::fs::write(p, report.to_csv())?;
            }
            Ok(())
        }
        Command::Bench {
            sizes,
            repeats,
            audio,
            output,
        } => {
            let sizes = sizes.unwrap_or_else(|| DEFAULT_SIZES_S.to_vec());
            if sizes.iter().any(|s| !(*s > 0.0)) || repeats == 0 {
                return Err(CliError::Usage("sizes and repeats must be positive".into()));
            }
            let buf = match audio {
                Some(p) => {
                    require_file(&p)?;
                    load_pcm(&p)?
                }
                None => {
                    let longest = sizes.iter().copied().fold(0.0, f64::max);
                    synth::conversation(1, 16000, longest + 1.0)?.audio
                }
            };
            let report = run_bench(&buf, &sizes, repeats, &cfg.vad)?;
            writeln!(out, "{}", cfg.header_line())?;
            write!(out, "{}", report.to_text())?;
            if let Some(p) = output {
                std::fs::write(p, report.to_csv())?;
            }
            Ok(())
        }
        Command::Synth {
            scenario,
            output,
            seed,
            rate,
            duration_s,
            freq,
            occupancy,
            count,
        } => {
            if rate == 0 || !(duration_s > 0.0) {
                return Err(CliError::Usage("rate and duration must be positive".into()));
            }
            let buf = synthesize(scenario, seed, rate, duration_s, freq, occupancy, count)?;
            write_wav(&output, &buf)?;
            writeln!(out, "wrote {:.2} s at {rate} Hz to {}", buf.duration_s(), output.display())?;
            Ok(())
        }
    }
}

fn mode_name(m: EvalMode) -> &'static str {
    match m {
        EvalMode::Emulated => "emulated",
        EvalMode::Loso => "loso",
        EvalMode::Cross => "cross",
    }
}

fn synthesize(
    scenario: Scenario,
    seed: u64,
    rate: u32,
    dur: f64,
    freq: f64,
    occupancy: f64,
    count: usize,
) -> crate::Result<AudioBuffer> {
    use rand::SeedableRng;
    match scenario {
        Scenario::Silence => AudioBuffer::mono(vec![0.0; (dur * f64::from(rate)).round() as usize], rate),
        Scenario::Sine => AudioBuffer::mono(synth::sine(freq, 0.5, rate, dur), rate),
        Scenario::Square => AudioBuffer::mono(synth::square(freq, 0.5, rate, dur), rate),
        Scenario::Noise => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            AudioBuffer::mono(synth::gaussian_noise(synth::NOISE_FLOOR, rate, dur, &mut rng), rate)
        }
        Scenario::Speech => Ok(synth::speech_window(seed, rate, dur, occupancy)?.audio),
        Scenario::Syllables => Ok(synth::syllable_window(seed, rate, dur, count, 0.25, 0.3)?.audio),
        Scenario::Vowel => Ok(synth::vowel_window(seed, rate, dur, 0.4, 500.0, 900.0)?.audio),
        Scenario::RunOn => Ok(synth::run_on_syllables(seed, rate, dur, count, 0.12)?.audio),
        Scenario::Conversation => Ok(synth::conversation(seed, rate, dur)?.audio),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let code = run(std::iter::once("swe").chain(args.iter().copied()), &mut out);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_capture(&["estimate", "--bogus"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["estimate", "/no/such.wav", "--model", "/no/m.bin"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["train", "x.csv", "-o", "m", "--features", "odd"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&[]).0, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        let (code, text) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(text.contains("extract"));
    }

    #[test]
    fn global_window_override_applies() {
        let g = GlobalOpts {
            config: None,
            window_s: Some(10.0),
            step_s: None,
        };
        let cfg = load_config(&g).unwrap_or_else(|_| panic!("config"));
        assert_eq!(cfg.analysis.window_ms, 10000);
        assert_eq!(cfg.analysis.step_ms, 1000);
    }
}

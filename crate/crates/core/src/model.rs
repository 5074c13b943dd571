//! Feed-forward workload regressor.
//!
//! Inputs are z-scored with statistics fitted on the training set, pass
//! through three ReLU layers of 256 units, and leave through a single
//! linear unit. The output is not clamped. Training minimizes mean squared
//! error with Adam over shuffled mini-batches and is bit-for-bit
//! reproducible for a given seed.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Names of the seven base features, in network input order.
pub const BASE_FEATURES: [&str; 7] = [
    "intensity_mean",
    "intensity_std",
    "pitch_mean",
    "pitch_std",
    "vad_mean",
    "vad_std",
    "syllables_per_second",
];
pub const RESPIRATION_FEATURE: &str = "respiration_rate";
pub const FILLER_FEATURE: &str = "filler_count";
/// Position of `vad_mean` in every feature vector.
pub const VAD_MEAN_INDEX: usize = 4;

/// Which optional features are appended to the base seven.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Base,
    Respiration,
    Fillers,
    Both,
}

impl FeatureSet {
    pub fn from_flags(respiration: bool, fillers: bool) -> Self {
        match (respiration, fillers) {
            (false, false) => Self::Base,
            (true, false) => Self::Respiration,
            (false, true) => Self::Fillers,
            (true, true) => Self::Both,
        }
    }

    pub fn has_respiration(self) -> bool {
        matches!(self, Self::Respiration | Self::Both)
    }

    pub fn has_fillers(self) -> bool {
        matches!(self, Self::Fillers | Self::Both)
    }

    pub fn dim(self) -> usize {
        7 + usize::from(self.has_respiration()) + usize::from(self.has_fillers())
    }

    pub fn names(self) -> Vec<&'static str> {
        let mut names = BASE_FEATURES.to_vec();
        if self.has_respiration() {
            names.push(RESPIRATION_FEATURE);
        }
        if self.has_fillers() {
            names.push(FILLER_FEATURE);
        }
        names
    }

    pub fn id(self) -> u8 {
        match self {
            Self::Base => 0,
            Self::Respiration => 1,
            Self::Fillers => 2,
            Self::Both => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        [Self::Base, Self::Respiration, Self::Fillers, Self::Both]
            .into_iter()
            .find(|s| s.id() == id)
    }

    /// Parses the command-line spelling: `base`, `+resp`, `+fillers`, `+both`.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim_start_matches('+') {
            "base" => Some(Self::Base),
            "resp" | "respiration" => Some(Self::Respiration),
            "fillers" => Some(Self::Fillers),
            "both" => Some(Self::Both),
            _ => None,
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Base => "base",
            Self::Respiration => "+resp",
            Self::Fillers => "+fillers",
            Self::Both => "+both",
        })
    }
}

/// Network input for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    set: FeatureSet,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(set: FeatureSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != set.dim() {
            return Err(Error::Dimension {
                expected: set.dim(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("feature `{}` is not finite", set.names()[i])));
        }
        if !(0.0..=1.0).contains(&values[VAD_MEAN_INDEX]) {
            return Err(Error::Data("vad_mean outside [0, 1]".into()));
        }
        Ok(Self { set, values })
    }

    pub fn set(&self) -> FeatureSet {
        self.set
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vad_mean(&self) -> f64 {
        self.values[VAD_MEAN_INDEX]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub hidden_layers: Vec<usize>,
    pub normalize_inputs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 64,
            epochs: 100,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            hidden_layers: vec![256, 256, 256],
            normalize_inputs: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.learning_rate > 0.0
            && self.batch_size > 0
            && self.epochs > 0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.hidden_layers.iter().all(|&h| h > 0);
        if positive {
            Ok(())
        } else {
            Err(Error::Config("training parameters must be positive".into()))
        }
    }

    /// FNV-1a over the canonical JSON form; stored in saved models.
    pub fn fingerprint(&self) -> u64 {
        let json = serde_json::to_string(self).unwrap_or_default();
        json.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

/// Fully connected layer. `weights` is row-major with one row per input.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.outputs..(i + 1) * self.outputs]
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for (i, &x) in input.iter().enumerate() {
            if x != 0.0 {
                axpy(out, x, self.row(i));
            }
        }
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Trained (or freshly initialized) network plus its input normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub feature_set: FeatureSet,
    pub layers: Vec<Dense>,
    pub norm_mean: Vec<f64>,
    pub norm_std: Vec<f64>,
    pub config_hash: u64,
}

impl ModelParams {
    /// Uniform fan-in initialization with identity normalization. Sizes
    /// run from the input dimension to the single output.
    pub fn init(sizes: &[usize], feature_set: FeatureSet, seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) || sizes[sizes.len() - 1] != 1 {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(l, pair)| {
                let mut layer = Dense::zeros(pair[0], pair[1]);
                let gain = if l == last { 3.0 } else { 6.0 };
                let limit = (gain / pair[0] as f64).sqrt();
                for w in &mut layer.weights {
                    *w = rng.random_range(-limit..limit);
                }
                layer
            })
            .collect();
        Ok(Self {
            feature_set,
            layers,
            norm_mean: vec![0.0; sizes[0]],
            norm_std: vec![1.0; sizes[0]],
            config_hash: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.norm_mean.iter().zip(&self.norm_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// Network output on a raw (unnormalized) input.
    pub fn forward_raw(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(self.forward_normalized(&self.normalize(x)))
    }

    pub fn forward(&self, x: &FeatureVector) -> Result<f64> {
        if x.set() != self.feature_set {
            return Err(Error::FeatureSetMismatch {
                model: self.feature_set,
                expected: x.set(),
            });
        }
        self.forward_raw(x.values())
    }

    fn forward_normalized(&self, x: &[f64]) -> f64 {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.apply(&cur, &mut next);
            if l != last {
                relu_in_place(&mut next);
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    /// Mean squared error and its gradient with respect to every weight and
    /// bias, for inputs already normalized.
    pub fn loss_and_gradient(&self, xs: &[&[f64]], ys: &[f64]) -> (f64, Vec<Dense>) {
        let batch = xs.len();
        let last = self.layers.len() - 1;
        let mut grads: Vec<Dense> = self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect();
        let mut loss = 0.0;
        // Activations per layer for one sample; index 0 is the input.
        let mut acts: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len() + 1];
        let mut delta = Vec::new();
        let mut back = Vec::new();
        for (x, &y) in xs.iter().zip(ys) {
            acts[0].clear();
            acts[0].extend_from_slice(x);
            for (l, layer) in self.layers.iter().enumerate() {
                let (done, rest) = acts.split_at_mut(l + 1);
                layer.apply(&done[l], &mut rest[0]);
                if l != last {
                    relu_in_place(&mut rest[0]);
                }
            }
            let err = acts[last + 1][0] - y;
            loss += err * err;

            delta.clear();
            delta.push(2.0 * err / batch as f64);
            for l in (0..=last).rev() {
                let layer = &self.layers[l];
                let g = &mut grads[l];
                let input = &acts[l];
                axpy(&mut g.bias, 1.0, &delta);
                for (i, &a) in input.iter().enumerate() {
                    if a != 0.0 {
                        axpy(&mut g.weights[i * layer.outputs..(i + 1) * layer.outputs], a, &delta);
                    }
                }
                if l == 0 {
                    break;
                }
                back.clear();
                back.extend((0..layer.inputs).map(|i| {
                    // ReLU derivative: the stored activation is zero exactly
                    // where the unit was inactive.
                    if input[i] > 0.0 {
                        layer.row(i).iter().zip(&delta).map(|(w, d)| w * d).sum()
                    } else {
                        0.0
                    }
                }));
                std::mem::swap(&mut delta, &mut back);
            }
        }
        (loss / batch as f64, grads)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All weights then biases, layer by layer.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let mut pos = 0;
        for l in &mut self.layers {
            let n = l.weights.len();
            l.weights.copy_from_slice(&flat[pos..pos + n]);
            pos += n;
            let n = l.bias.len();
            l.bias.copy_from_slice(&flat[pos..pos + n]);
            pos += n;
        }
    }

    /// Mean squared error over raw samples.
    pub fn mse(&self, samples: &[Sample]) -> f64 {
        let total: f64 = samples
            .iter()
            .map(|s| (self.forward_normalized(&self.normalize(&s.features)) - s.label).powi(2))
            .sum();
        total / samples.len().max(1) as f64
    }
}

/// One labelled training row.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean squared error over the whole training set after each epoch.
    pub epoch_losses: Vec<f64>,
    pub rejected_rows: usize,
}

fn fit_normalization(samples: &[Sample], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len() as f64;
    let mut mean = vec![0.0; dim];
    for s in samples {
        axpy(&mut mean, 1.0 / n, &s.features);
    }
    let mut var = vec![0.0; dim];
    for s in samples {
        for ((v, x), m) in var.iter_mut().zip(&s.features).zip(&mean) {
            *v += (x - m).powi(2) / n;
        }
    }
    let std = var
        .into_iter()
        .map(|v| {
            let s = v.sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, std)
}

pub fn train(data: &[Sample], feature_set: FeatureSet, cfg: &TrainConfig) -> Result<(ModelParams, TrainReport)> {
    cfg.validate()?;
    let dim = feature_set.dim();
    let mut rows: Vec<Sample> = Vec::with_capacity(data.len());
    let mut rejected = 0;
    for s in data {
        if s.features.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: s.features.len(),
            });
        }
        if s.features.iter().all(|v| v.is_finite()) && s.label.is_finite() {
            rows.push(s.clone());
        } else {
            rejected += 1;
        }
    }
    if rejected > 0 {
        log::warn!("rejected {rejected} training rows with non-finite values");
    }
    if rows.is_empty() {
        return Err(Error::Empty("no usable training rows"));
    }

    let mut sizes = vec![dim];
    sizes.extend(&cfg.hidden_layers);
    sizes.push(1);
    let mut model = ModelParams::init(&sizes, feature_set, cfg.seed)?;
    model.config_hash = cfg.fingerprint();
    if cfg.normalize_inputs {
        let (mean, std) = fit_normalization(&rows, dim);
        model.norm_mean = mean;
        model.norm_std = std;
    }
    let label_mean = rows.iter().map(|s| s.label).sum::<f64>() / rows.len() as f64;
    model.layers.last_mut().expect("at least one layer").bias[0] = label_mean;

    let normalized: Vec<Vec<f64>> = rows.iter().map(|s| model.normalize(&s.features)).collect();
    let labels: Vec<f64> = rows.iter().map(|s| s.label).collect();

    let mut params = model.flat_params();
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed_5eed_5eed);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut flat_grad = Vec::with_capacity(params.len());

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| normalized[i].as_slice()).collect();
            let ys: Vec<f64> = batch.iter().map(|&i| labels[i]).collect();
            let (_, grads) = model.loss_and_gradient(&xs, &ys);
            flat_grad.clear();
            for g in &grads {
                flat_grad.extend_from_slice(&g.weights);
                flat_grad.extend_from_slice(&g.bias);
            }
            step += 1;
            let bc1 = 1.0 - cfg.beta1.powi(step);
            let bc2 = 1.0 - cfg.beta2.powi(step);
            for (((p, g), m), v) in params.iter_mut().zip(&flat_grad).zip(&mut m).zip(&mut v) {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
            model.set_flat_params(&params);
        }
        epoch_losses.push(model.mse(&rows));
    }
    Ok((
        model,
        TrainReport {
            epoch_losses,
            rejected_rows: rejected,
        },
    ))
}

const MAGIC: &[u8; 4] = b"SWLM";
pub const FORMAT_VERSION: u16 = 1;

impl ModelParams {
    /// Serialize to the versioned little-endian weight format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + self.param_count() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.feature_set.id());
        out.push(0);
        out.extend_from_slice(&self.config_hash.to_le_bytes());
        let sizes = self.layer_sizes();
        out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
        for s in sizes {
            out.extend_from_slice(&(s as u32).to_le_bytes());
        }
        let floats = self
            .norm_mean
            .iter()
            .chain(&self.norm_std)
            .chain(self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias)));
        for f in floats {
            out.extend_from_slice(&f.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::ModelFormat("bad magic bytes".into()));
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let id = r.take(1)?[0];
        let feature_set =
            FeatureSet::from_id(id).ok_or_else(|| Error::ModelFormat(format!("unknown feature set id {id}")))?;
        r.take(1)?;
        let config_hash = u64::from_le_bytes(r.array()?);
        let n = u32::from_le_bytes(r.array()?) as usize;
        if !(2..=64).contains(&n) {
            return Err(Error::ModelFormat(format!("implausible layer count {n}")));
        }
        let sizes = (0..n)
            .map(|_| r.array().map(|b| u32::from_le_bytes(b) as usize))
            .collect::<Result<Vec<_>>>()?;
        if sizes[0] != feature_set.dim() || sizes[n - 1] != 1 || sizes.contains(&0) {
            return Err(Error::ModelFormat(format!(
                "layer sizes {sizes:?} do not fit feature set `{feature_set}`"
            )));
        }
        let norm_mean = r.floats(sizes[0])?;
        let norm_std = r.floats(sizes[0])?;
        if norm_std.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::ModelFormat("normalization std must be positive".into()));
        }
        let layers = sizes
            .windows(2)
            .map(|p| {
                Ok(Dense {
                    inputs: p[0],
                    outputs: p[1],
                    weights: r.floats(p[0] * p[1])?,
                    bias: r.floats(p[1])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if r.pos != bytes.len() {
            return Err(Error::ModelFormat(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self {
            feature_set,
            layers,
            norm_mean,
            norm_std,
            config_hash,
        })
    }

    /// Load and check the model was trained for `expected` features.
    pub fn from_bytes_for(bytes: &[u8], expected: FeatureSet) -> Result<Self> {
        let model = Self::from_bytes(bytes)?;
        if model.feature_set != expected {
            return Err(Error::FeatureSetMismatch {
                model: model.feature_set,
                expected,
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::ModelFormat("file truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::ModelFormat("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(set: FeatureSet, bias: f64) -> ModelParams {
        let mut sizes = vec![set.dim(), 4, 4, 4, 1];
        sizes[0] = set.dim();
        let mut m = ModelParams::init(&sizes, set, 1).unwrap();
        for l in &mut m.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.bias.iter_mut().for_each(|b| *b = 0.0);
        }
        m.layers.last_mut().unwrap().bias[0] = bias;
        m
    }

    #[test]
    fn zero_weights_output_the_bias() {
        let m = constant(FeatureSet::Base, 1.75);
        let x = FeatureVector::new(FeatureSet::Base, vec![0.3, 0.1, 150.0, 20.0, 0.4, 0.49, 2.0]).unwrap();
        assert_eq!(m.forward(&x).unwrap(), 1.75);
    }

    #[test]
    fn single_path_network_copies_first_input() {
        // x0 -> unit 0 of each hidden layer with weight 1, everything else 0.
        // Valid for x0 >= 0 since the path crosses three ReLUs.
        let mut m = constant(FeatureSet::Base, 0.0);
        for l in &mut m.layers {
            l.weights[0] = 1.0;
        }
        for x0 in [0.0, 0.25, 3.5] {
            let x = vec![x0, 9.0, 100.0, 5.0, 0.5, 0.5, 3.0];
            assert_eq!(m.forward_raw(&x).unwrap(), x0);
        }
    }

    #[test]
    fn dimension_and_feature_set_checks() {
        let m = constant(FeatureSet::Base, 0.0);
        assert!(matches!(m.forward_raw(&[0.0; 8]), Err(Error::Dimension { expected: 7, got: 8 })));
        let x = FeatureVector::new(FeatureSet::Respiration, vec![0.0; 8]).unwrap();
        assert!(matches!(m.forward(&x), Err(Error::FeatureSetMismatch { .. })));
        assert!(FeatureVector::new(FeatureSet::Base, vec![0.0; 6]).is_err());
        assert!(FeatureVector::new(FeatureSet::Base, vec![0.0, 0.0, 0.0, 0.0, 1.5, 0.0, 0.0]).is_err());
        assert!(FeatureVector::new(FeatureSet::Base, vec![f64::NAN, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn feature_set_spellings() {
        for s in [FeatureSet::Base, FeatureSet::Respiration, FeatureSet::Fillers, FeatureSet::Both] {
            assert_eq!(FeatureSet::parse(&s.to_string()), Some(s));
            assert_eq!(FeatureSet::from_id(s.id()), Some(s));
            assert_eq!(s.names().len(), s.dim());
        }
        assert_eq!(FeatureSet::Both.names()[7..], ["respiration_rate", "filler_count"]);
        assert_eq!(FeatureSet::parse("+wat"), None);
    }

    #[test]
    fn round_trip_and_corruption() {
        let mut m = ModelParams::init(&[8, 5, 3, 1], FeatureSet::Fillers, 9).unwrap();
        m.norm_mean = (0..8).map(f64::from).collect();
        m.norm_std = (1..9).map(f64::from).collect();
        m.config_hash = 0xdead_beef;
        let bytes = m.to_bytes();
        assert_eq!(ModelParams::from_bytes(&bytes).unwrap(), m);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(ModelParams::from_bytes(&bad), Err(Error::ModelFormat(_))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(ModelParams::from_bytes(&bad), Err(Error::ModelFormat(_))));
        assert!(ModelParams::from_bytes(&bytes[..bytes.len() - 1]).is_err());

        assert!(matches!(
            ModelParams::from_bytes_for(&bytes, FeatureSet::Base),
            Err(Error::FeatureSetMismatch {
                model: FeatureSet::Fillers,
                expected: FeatureSet::Base
            })
        ));
    }

    #[test]
    fn training_rejects_bad_rows_and_empty_data() {
        let cfg = TrainConfig {
            epochs: 1,
            hidden_layers: vec![4],
            ..Default::default()
        };
        assert!(matches!(train(&[], FeatureSet::Base, &cfg), Err(Error::Empty(_))));
        let rows = vec![
            Sample {
                features: vec![f64::NAN; 7],
                label: 1.0,
            },
            Sample {
                features: vec![0.5; 7],
                label: 1.0,
            },
        ];
        let (_, report) = train(&rows, FeatureSet::Base, &cfg).unwrap();
        assert_eq!(report.rejected_rows, 1);
    }

    #[test]
    fn zero_variance_features_store_unit_std() {
        let rows: Vec<Sample> = (0..10)
            .map(|i| Sample {
                features: vec![1.0, f64::from(i), 0.0, 0.0, 0.5, 0.0, 0.0],
                label: 1.0,
            })
            .collect();
        let cfg = TrainConfig {
            epochs: 1,
            hidden_layers: vec![4],
            ..Default::default()
        };
        let (m, _) = train(&rows, FeatureSet::Base, &cfg).unwrap();
        assert_eq!(m.norm_std[0], 1.0);
        assert!(m.norm_std[1] > 1.0);
        assert!(m.norm_std.iter().all(|&s| s > 0.0));
    }
}

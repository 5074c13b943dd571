//! Engine configuration loaded from TOML.
//!
//! ```toml
//! [analysis]
//! window_ms = 5000
//! step_ms = 1000
//!
//! [vad]
//! primary_threshold = 40.0
//!
//! [features]
//! fillers = "on"
//! respiration = "off"
//!
//! [train]
//! epochs = 50
//! seed = 7
//! ```
//!
//! Every section and key is optional. The default path can be supplied
//! through the `SWE_CONFIG` environment variable.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framing::AnalysisConfig;
use crate::model::{FeatureSet, TrainConfig};
use crate::vad::VadParams;

pub const CONFIG_ENV: &str = "SWE_CONFIG";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Toggle {
    On,
    #[default]
    Off,
}

impl Toggle {
    pub fn is_on(self) -> bool {
        self == Self::On
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureToggles {
    pub fillers: Toggle,
    pub respiration: Toggle,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub analysis: AnalysisConfig,
    pub vad: VadParams,
    pub features: FeatureToggles,
    pub train: TrainConfig,
}

impl EngineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The explicit path if given, else the environment default, else the
    /// built-in defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(p),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.analysis.validate()?;
        self.vad.validate()?;
        self.train.validate()
    }

    pub fn feature_set(&self) -> FeatureSet {
        FeatureSet::from_flags(self.features.respiration.is_on(), self.features.fillers.is_on())
    }

    pub fn set_feature_set(&mut self, set: FeatureSet) {
        let toggle = |on| if on { Toggle::On } else { Toggle::Off };
        self.features.respiration = toggle(set.has_respiration());
        self.features.fillers = toggle(set.has_fillers());
    }

    /// Single-line form echoed at the top of generated files.
    pub fn header_line(&self) -> String {
        format!("# config: {}", serde_json::to_string(self).unwrap_or_default())
    }
}

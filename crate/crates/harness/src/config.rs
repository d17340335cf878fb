//! Session configuration, read from JSON and validated before anything runs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use teleop_entropy::entropy::DEFAULT_PERIOD_MS;
use teleop_entropy::pipeline::DEFAULT_BASELINE_MS;
use teleop_entropy::wais::{DEFAULT_THRESHOLD, DEFAULT_WINDOW};
use teleop_entropy::{EngineError, EntropyConfig, PipelineConfig64, TaylorForm, WaisConfig};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropySection {
    pub period_ms: u64,
    pub weights: [f64; 2],
}

impl Default for EntropySection {
    fn default() -> Self {
        Self {
            period_ms: DEFAULT_PERIOD_MS,
            weights: [0.5, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaisSection {
    pub window: usize,
    pub threshold: f64,
    pub hysteresis: f64,
}

impl Default for WaisSection {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            threshold: DEFAULT_THRESHOLD,
            hysteresis: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Taylor {
    #[default]
    Summed,
    Classical,
}

impl From<Taylor> for TaylorForm {
    fn from(t: Taylor) -> Self {
        match t {
            Taylor::Summed => TaylorForm::Summed,
            Taylor::Classical => TaylorForm::Classical,
        }
    }
}

/// Where the starting profile comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaselineSource {
    /// A profile file written by `baseline`.
    File { path: PathBuf },
    /// The first `duration_ms` of the session itself is the trial run.
    Inline { duration_ms: u64 },
    /// Fixed α with unbounded DPU thresholds.
    Defaults { alpha_lin: f64, alpha_ang: f64 },
}

impl Default for BaselineSource {
    fn default() -> Self {
        BaselineSource::Defaults {
            alpha_lin: 0.2,
            alpha_ang: 0.4,
        }
    }
}

impl BaselineSource {
    pub fn inline() -> Self {
        BaselineSource::Inline {
            duration_ms: DEFAULT_BASELINE_MS,
        }
    }
}

/// Output locations. Not part of a trace's provenance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub trace: Option<PathBuf>,
    /// Where the server captures the received command stream.
    pub log: Option<PathBuf>,
}

impl OutputPaths {
    fn is_empty(&self) -> bool {
        self.trace.is_none() && self.log.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub entropy: EntropySection,
    pub wais: WaisSection,
    pub dpu_enabled: bool,
    pub taylor: Taylor,
    pub baseline: BaselineSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "OutputPaths::is_empty")]
    pub output: OutputPaths,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            entropy: EntropySection::default(),
            wais: WaisSection::default(),
            dpu_enabled: true,
            taylor: Taylor::default(),
            baseline: BaselineSource::default(),
            seed: None,
            output: OutputPaths::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl SessionConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn pipeline_config(&self) -> PipelineConfig64 {
        PipelineConfig64 {
            entropy: EntropyConfig {
                period_ms: self.entropy.period_ms,
                weights: self.entropy.weights,
            },
            wais: WaisConfig {
                window: self.wais.window,
                threshold: self.wais.threshold,
                hysteresis: self.wais.hysteresis,
            },
            dpu_enabled: self.dpu_enabled,
            taylor: self.taylor.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.pipeline_config().validate()?;
        match &self.baseline {
            BaselineSource::Inline { duration_ms: 0 } => {
                Err(ConfigError::Invalid("inline baseline duration must be positive".into()))
            }
            BaselineSource::Defaults { alpha_lin, alpha_ang }
                if !(alpha_lin.is_finite() && *alpha_lin > 0.0 && alpha_ang.is_finite() && *alpha_ang > 0.0) =>
            {
                Err(ConfigError::Invalid(format!(
                    "default alphas ({alpha_lin}, {alpha_ang}) must be positive"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Everything that determines a trace's content, as one JSON line.
    pub fn provenance_json(&self) -> String {
        let mut p = self.clone();
        p.output = OutputPaths::default();
        serde_json::to_string(&p).expect("config serializes")
    }
}

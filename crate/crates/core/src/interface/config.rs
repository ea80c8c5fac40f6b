//! Application config: one JSON object of flat dotted keys, e.g.
//! `{"train.epochs": 200, "paths.dataset": "data/ds.json"}`.
//!
//! Relative `paths.*` values in a file resolve against the file's directory;
//! values given with `--set` resolve against the working directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::encoder::ModelConfig;
use crate::inference::DEFAULT_MAX_ANSWER_TOKENS;
use crate::training::TrainConfig;

pub const CONFIG_ENV: &str = "BNQA_CONFIG";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus_dir: Option<PathBuf>,
    /// Skeleton dataset written by `ingest`.
    pub contexts: Option<PathBuf>,
    /// Annotated dataset.
    pub dataset: Option<PathBuf>,
    pub train_dataset: Option<PathBuf>,
    pub eval_dataset: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub checkpoint_dir: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabParams {
    pub max_size: usize,
    pub min_freq: usize,
}

impl Default for VocabParams {
    fn default() -> Self {
        Self {
            max_size: 8000,
            min_freq: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitParams {
    pub eval_fraction: f64,
    /// Defaults to `train.seed`.
    pub seed: Option<u64>,
}

impl Default for SplitParams {
    fn default() -> Self {
        Self {
            eval_fraction: 0.2,
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeParams {
    pub k: usize,
    pub max_answer_tokens: usize,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self {
            k: 3,
            max_answer_tokens: DEFAULT_MAX_ANSWER_TOKENS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceParams {
    pub bind: String,
    pub port: u16,
    /// Longest accepted request context, in code points.
    pub max_context_chars: usize,
    /// Origins allowed by CORS; empty disables CORS headers.
    pub cors_origins: Vec<String>,
}

impl Default for ServiceParams {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            port: 8080,
            max_context_chars: 10_000,
            cors_origins: vec!["http://localhost:5173".into()],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub paths: Paths,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub vocab: VocabParams,
    pub split: SplitParams,
    pub decode: DecodeParams,
    pub service: ServiceParams,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("invalid value for {key}: {detail}")]
    InvalidValue { key: String, detail: String },
}

fn invalid(key: &str, detail: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        detail: detail.into(),
    }
}

impl AppConfig {
    /// Every dotted key with its current value.
    pub fn flatten(&self) -> Vec<(String, Value)> {
        let tree = serde_json::to_value(self).expect("config serializes");
        let mut out = Vec::new();
        if let Value::Object(sections) = tree {
            for (section, fields) in sections {
                if let Value::Object(fields) = fields {
                    for (k, v) in fields {
                        out.push((format!("{section}.{k}"), v));
                    }
                }
            }
        }
        out
    }

    /// Sets one dotted key, checking the value against the field's type.
    pub fn set(&mut self, key: &str, value: Value) -> Result<(), ConfigError> {
        let (section, field) = key.split_once('.').ok_or_else(|| ConfigError::UnknownKey(key.into()))?;
        let mut tree = serde_json::to_value(&*self).expect("config serializes");
        let slot = tree
            .get_mut(section)
            .and_then(|s| s.as_object_mut())
            .filter(|s| s.contains_key(field))
            .ok_or_else(|| ConfigError::UnknownKey(key.into()))?;
        slot.insert(field.to_string(), value);
        *self = serde_json::from_value(tree).map_err(|e| invalid(key, e.to_string()))?;
        Ok(())
    }

    /// Parses `key=value`. The value is read as JSON when it parses as JSON,
    /// otherwise as a plain string.
    pub fn set_str(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse(format!("expected key=value, got {assignment:?}")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        self.set(key.trim(), value)
    }

    pub fn from_flat_json(text: &str, base_dir: Option<&Path>) -> Result<Self, ConfigError> {
        let map: Map<String, Value> =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(format!("config is not a JSON object: {e}")))?;
        let mut config = Self::default();
        for (key, mut value) in map {
            if let (Some(base), true, Value::String(s)) = (base_dir, key.starts_with("paths."), &value) {
                let p = Path::new(s);
                if p.is_relative() {
                    value = Value::String(base.join(p).to_string_lossy().into_owned());
                }
            }
            config.set(&key, value)?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_flat_json(&text, path.parent())
    }

    /// Range checks beyond what the types enforce.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut model = self.model.clone();
        model.vocab_size = model.vocab_size.max(1);
        model.dropout_rate = self.train.dropout_rate;
        model.validate().map_err(|e| invalid("model", e.to_string()))?;
        self.train.validate().map_err(|e| invalid("train", e.to_string()))?;
        if self.train.max_len > self.model.max_positions {
            return Err(invalid(
                "train.max_len",
                format!("{} exceeds model.max_positions {}", self.train.max_len, self.model.max_positions),
            ));
        }
        if self.decode.k == 0 {
            return Err(invalid("decode.k", "must be at least 1"));
        }
        if self.decode.max_answer_tokens == 0 {
            return Err(invalid("decode.max_answer_tokens", "must be at least 1"));
        }
        if !(self.split.eval_fraction > 0.0 && self.split.eval_fraction < 1.0) {
            return Err(invalid("split.eval_fraction", "must lie strictly between 0 and 1"));
        }
        if self.vocab.min_freq == 0 {
            return Err(invalid("vocab.min_freq", "must be at least 1"));
        }
        if self.service.max_context_chars == 0 {
            return Err(invalid("service.max_context_chars", "must be at least 1"));
        }
        Ok(())
    }

    pub fn split_seed(&self) -> u64 {
        self.split.seed.unwrap_or(self.train.seed)
    }
}

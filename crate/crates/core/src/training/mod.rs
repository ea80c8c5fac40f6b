//! Span-supervised fine-tuning: example construction, loss, AdamW, the
//! resumable training loop and checkpoints.

mod checkpoint;
mod examples;
mod optim;
mod trainer;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::encoder::ModelError;
use crate::numerics::NumericsError;
use crate::tokenizer::{TokenizerError, DEFAULT_DOC_STRIDE, DEFAULT_MAX_LEN};

pub use checkpoint::{
    decode_tensors, encode_tensors, Checkpoint, Manifest, RngState, TensorEntry, MAGIC, MANIFEST_FILE, VOCAB_FILE,
    WEIGHTS_FILE,
};
pub use examples::{answer_char_span, build_examples, ExampleSet, SkippedQuestion, TrainingExample};
pub use optim::{adamw_update, clip_scale, global_norm, optimizer_step, qa_loss, AdamState, StepStats};
pub use trainer::{train, EpochReport, StepOutcome, TrainReport, Trainer};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub grad_clip_norm: f64,
    pub seed: u64,
    pub max_len: usize,
    pub doc_stride: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-5,
            batch_size: 16,
            epochs: 3,
            dropout_rate: 0.1,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            grad_clip_norm: 1.0,
            seed: 42,
            max_len: DEFAULT_MAX_LEN,
            doc_stride: DEFAULT_DOC_STRIDE,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: String| Err(TrainError::Config(m));
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("epsilon", self.epsilon),
            ("grad_clip_norm", self.grad_clip_norm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return fail(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail(format!("dropout_rate {} outside [0, 1)", self.dropout_rate));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return fail(format!("{name} {b} outside [0, 1)"));
            }
        }
        if self.max_len < 4 || self.doc_stride == 0 {
            return fail("max_len must be at least 4 and doc_stride at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("no training examples")]
    NoExamples,
    #[error("non-finite gradient at step {step}")]
    NonFiniteGradient { step: u64 },
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: u64 },
    #[error("checkpoint {path}: {detail}")]
    Checkpoint { path: PathBuf, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
}

impl TrainError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

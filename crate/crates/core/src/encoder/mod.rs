//! Transformer encoder with a linear span head producing start/end logits.
//!
//! Post-norm blocks: `x = LN(x + Drop(Attn(x)))`, `x = LN(x + Drop(FF(x)))`,
//! with GELU in the feed-forward sublayer.

mod forward;
mod params;

use serde::{Deserialize, Serialize};

use crate::numerics::NumericsError;

pub use forward::{batch_inputs, dropout_seed, forward, infer_logits, BatchInputs, ForwardOutput, WindowLogits, MASK_VALUE};
pub use params::{decays, LayerParams, ModelWeights, Params, INIT_STD};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_layers: usize,
    pub hidden_size: usize,
    pub num_heads: usize,
    pub ff_size: usize,
    pub vocab_size: usize,
    pub max_positions: usize,
    pub type_vocab_size: usize,
    pub dropout_rate: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_layers: 2,
            hidden_size: 64,
            num_heads: 4,
            ff_size: 256,
            vocab_size: 2000,
            max_positions: 128,
            type_vocab_size: 2,
            dropout_rate: 0.1,
        }
    }
}

impl ModelConfig {
    pub fn head_dim(&self) -> usize {
        self.hidden_size / self.num_heads.max(1)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |m: String| Err(ModelError::Config(m));
        if self.num_layers == 0 {
            return fail("num_layers must be at least 1".into());
        }
        if self.num_heads == 0 || self.hidden_size == 0 || self.hidden_size % self.num_heads != 0 {
            return fail(format!(
                "hidden_size {} must be a positive multiple of num_heads {}",
                self.hidden_size, self.num_heads
            ));
        }
        if self.ff_size == 0 || self.vocab_size == 0 || self.max_positions == 0 {
            return fail("ff_size, vocab_size and max_positions must be positive".into());
        }
        if self.type_vocab_size < 2 {
            return fail("type_vocab_size must be at least 2".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail(format!("dropout_rate {} outside [0, 1)", self.dropout_rate));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("token id {id} at batch {row}, position {position} is outside the vocabulary of {vocab_size}")]
    TokenOutOfRange {
        id: u32,
        row: usize,
        position: usize,
        vocab_size: usize,
    },
    #[error("batch row {row}: {detail}")]
    BadInput { row: usize, detail: String },
    #[error("empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

//! Parameter containers, generic over what is stored per parameter: owned
//! [`Tensor`]s for the model, tape [`Var`](crate::numerics::Var)s while a
//! forward pass is being recorded, or optimizer moments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{ModelConfig, ModelError};
use crate::numerics::Tensor;

pub const INIT_STD: f64 = 0.02;

#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T> {
    pub query_weight: T,
    pub query_bias: T,
    pub key_weight: T,
    pub key_bias: T,
    pub value_weight: T,
    pub value_bias: T,
    pub output_weight: T,
    pub output_bias: T,
    pub attention_ln_gain: T,
    pub attention_ln_bias: T,
    pub ff_in_weight: T,
    pub ff_in_bias: T,
    pub ff_out_weight: T,
    pub ff_out_bias: T,
    pub ff_ln_gain: T,
    pub ff_ln_bias: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Params<T> {
    pub token_embedding: T,
    pub position_embedding: T,
    pub segment_embedding: T,
    pub embedding_ln_gain: T,
    pub embedding_ln_bias: T,
    pub layers: Vec<LayerParams<T>>,
    /// `[H, 2]`: column 0 scores answer starts, column 1 answer ends.
    pub qa_weight: T,
    pub qa_bias: T,
}

/// All learnable tensors of the encoder and span head.
pub type ModelWeights = Params<Tensor>;

impl<T> LayerParams<T> {
    fn entries(&self) -> [(&'static str, &T); 16] {
        [
            ("attention.query.weight", &self.query_weight),
            ("attention.query.bias", &self.query_bias),
            ("attention.key.weight", &self.key_weight),
            ("attention.key.bias", &self.key_bias),
            ("attention.value.weight", &self.value_weight),
            ("attention.value.bias", &self.value_bias),
            ("attention.output.weight", &self.output_weight),
            ("attention.output.bias", &self.output_bias),
            ("attention.ln.gain", &self.attention_ln_gain),
            ("attention.ln.bias", &self.attention_ln_bias),
            ("ff.in.weight", &self.ff_in_weight),
            ("ff.in.bias", &self.ff_in_bias),
            ("ff.out.weight", &self.ff_out_weight),
            ("ff.out.bias", &self.ff_out_bias),
            ("ff.ln.gain", &self.ff_ln_gain),
            ("ff.ln.bias", &self.ff_ln_bias),
        ]
    }

    fn entries_mut(&mut self) -> [&mut T; 16] {
        [
            &mut self.query_weight,
            &mut self.query_bias,
            &mut self.key_weight,
            &mut self.key_bias,
            &mut self.value_weight,
            &mut self.value_bias,
            &mut self.output_weight,
            &mut self.output_bias,
            &mut self.attention_ln_gain,
            &mut self.attention_ln_bias,
            &mut self.ff_in_weight,
            &mut self.ff_in_bias,
            &mut self.ff_out_weight,
            &mut self.ff_out_bias,
            &mut self.ff_ln_gain,
            &mut self.ff_ln_bias,
        ]
    }

    fn try_map<U, E>(&self, prefix: &str, f: &mut impl FnMut(&str, &T) -> Result<U, E>) -> Result<LayerParams<U>, E> {
        let mut g = |suffix: &str, t: &T| f(&format!("{prefix}.{suffix}"), t);
        Ok(LayerParams {
            query_weight: g("attention.query.weight", &self.query_weight)?,
            query_bias: g("attention.query.bias", &self.query_bias)?,
            key_weight: g("attention.key.weight", &self.key_weight)?,
            key_bias: g("attention.key.bias", &self.key_bias)?,
            value_weight: g("attention.value.weight", &self.value_weight)?,
            value_bias: g("attention.value.bias", &self.value_bias)?,
            output_weight: g("attention.output.weight", &self.output_weight)?,
            output_bias: g("attention.output.bias", &self.output_bias)?,
            attention_ln_gain: g("attention.ln.gain", &self.attention_ln_gain)?,
            attention_ln_bias: g("attention.ln.bias", &self.attention_ln_bias)?,
            ff_in_weight: g("ff.in.weight", &self.ff_in_weight)?,
            ff_in_bias: g("ff.in.bias", &self.ff_in_bias)?,
            ff_out_weight: g("ff.out.weight", &self.ff_out_weight)?,
            ff_out_bias: g("ff.out.bias", &self.ff_out_bias)?,
            ff_ln_gain: g("ff.ln.gain", &self.ff_ln_gain)?,
            ff_ln_bias: g("ff.ln.bias", &self.ff_ln_bias)?,
        })
    }
}

impl<T> Params<T> {
    /// Every parameter with its dotted name, in a fixed order.
    pub fn named(&self) -> Vec<(String, &T)> {
        let mut out = vec![
            ("embeddings.token".to_string(), &self.token_embedding),
            ("embeddings.position".to_string(), &self.position_embedding),
            ("embeddings.segment".to_string(), &self.segment_embedding),
            ("embeddings.ln.gain".to_string(), &self.embedding_ln_gain),
            ("embeddings.ln.bias".to_string(), &self.embedding_ln_bias),
        ];
        for (i, layer) in self.layers.iter().enumerate() {
            out.extend(layer.entries().into_iter().map(|(n, t)| (format!("layers.{i}.{n}"), t)));
        }
        out.push(("qa.weight".to_string(), &self.qa_weight));
        out.push(("qa.bias".to_string(), &self.qa_bias));
        out
    }

    /// Mutable access in the same order as [`Params::named`].
    pub fn values_mut(&mut self) -> Vec<&mut T> {
        let mut out = vec![
            &mut self.token_embedding,
            &mut self.position_embedding,
            &mut self.segment_embedding,
            &mut self.embedding_ln_gain,
            &mut self.embedding_ln_bias,
        ];
        for layer in &mut self.layers {
            out.extend(layer.entries_mut());
        }
        out.push(&mut self.qa_weight);
        out.push(&mut self.qa_bias);
        out
    }

    /// Builds a parallel container, visiting parameters in [`Params::named`] order.
    pub fn try_map<U, E>(&self, mut f: impl FnMut(&str, &T) -> Result<U, E>) -> Result<Params<U>, E> {
        let token_embedding = f("embeddings.token", &self.token_embedding)?;
        let position_embedding = f("embeddings.position", &self.position_embedding)?;
        let segment_embedding = f("embeddings.segment", &self.segment_embedding)?;
        let embedding_ln_gain = f("embeddings.ln.gain", &self.embedding_ln_gain)?;
        let embedding_ln_bias = f("embeddings.ln.bias", &self.embedding_ln_bias)?;
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| l.try_map(&format!("layers.{i}"), &mut f))
            .collect::<Result<_, E>>()?;
        Ok(Params {
            token_embedding,
            position_embedding,
            segment_embedding,
            embedding_ln_gain,
            embedding_ln_bias,
            layers,
            qa_weight: f("qa.weight", &self.qa_weight)?,
            qa_bias: f("qa.bias", &self.qa_bias)?,
        })
    }

    pub fn map<U>(&self, mut f: impl FnMut(&str, &T) -> U) -> Params<U> {
        self.try_map(|n, t| Ok::<_, std::convert::Infallible>(f(n, t)))
            .unwrap_or_else(|e| match e {})
    }
}

/// Whether decoupled weight decay applies: not to biases or layer-norm gains.
pub fn decays(name: &str) -> bool {
    !(name.ends_with(".bias") || name.ends_with(".gain"))
}

impl ModelWeights {
    /// Parameter shapes for a configuration, all filled with zeros.
    pub fn zeros(config: &ModelConfig) -> Self {
        let (h, f) = (config.hidden_size, config.ff_size);
        let layer = || LayerParams {
            query_weight: Tensor::zeros(&[h, h]),
            query_bias: Tensor::zeros(&[h]),
            key_weight: Tensor::zeros(&[h, h]),
            key_bias: Tensor::zeros(&[h]),
            value_weight: Tensor::zeros(&[h, h]),
            value_bias: Tensor::zeros(&[h]),
            output_weight: Tensor::zeros(&[h, h]),
            output_bias: Tensor::zeros(&[h]),
            attention_ln_gain: Tensor::zeros(&[h]),
            attention_ln_bias: Tensor::zeros(&[h]),
            ff_in_weight: Tensor::zeros(&[h, f]),
            ff_in_bias: Tensor::zeros(&[f]),
            ff_out_weight: Tensor::zeros(&[f, h]),
            ff_out_bias: Tensor::zeros(&[h]),
            ff_ln_gain: Tensor::zeros(&[h]),
            ff_ln_bias: Tensor::zeros(&[h]),
        };
        Params {
            token_embedding: Tensor::zeros(&[config.vocab_size, h]),
            position_embedding: Tensor::zeros(&[config.max_positions, h]),
            segment_embedding: Tensor::zeros(&[config.type_vocab_size, h]),
            embedding_ln_gain: Tensor::zeros(&[h]),
            embedding_ln_bias: Tensor::zeros(&[h]),
            layers: (0..config.num_layers).map(|_| layer()).collect(),
            qa_weight: Tensor::zeros(&[h, 2]),
            qa_bias: Tensor::zeros(&[2]),
        }
    }

    /// Matrices from N(0, 0.02²) truncated at ±2σ, layer-norm gains 1,
    /// biases 0. Deterministic per seed.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut weights = Self::zeros(config);
        let names: Vec<String> = weights.named().into_iter().map(|(n, _)| n).collect();
        let normal = Normal::new(0.0, INIT_STD).expect("valid std");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (name, tensor) in names.iter().zip(weights.values_mut()) {
            if name.ends_with(".gain") {
                tensor.data_mut().fill(1.0);
            } else if name.ends_with(".bias") {
                continue;
            } else {
                for v in tensor.data_mut() {
                    *v = loop {
                        let x: f64 = normal.sample(&mut rng);
                        if x.abs() <= 2.0 * INIT_STD {
                            break x;
                        }
                    };
                }
            }
        }
        Ok(weights)
    }

    pub fn parameter_count(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.named().iter().all(|(_, t)| t.all_finite())
    }
}

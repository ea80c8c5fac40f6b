use super::{ModelConfig, ModelError, ModelWeights, Params};
use crate::numerics::{Tape, Tensor, Var, LAYER_NORM_EPS};
use crate::tokenizer::Encoding;

/// Added to attention scores of padded key positions before the softmax.
pub const MASK_VALUE: f64 = -1e9;

/// Flattened, validated token inputs for a batch of equal-length windows.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchInputs {
    pub batch: usize,
    pub seq_len: usize,
    pub ids: Vec<usize>,
    pub segments: Vec<usize>,
    pub positions: Vec<usize>,
    pub mask: Vec<bool>,
}

pub fn batch_inputs(config: &ModelConfig, batch: &[&Encoding]) -> Result<BatchInputs, ModelError> {
    let first = batch.first().ok_or(ModelError::EmptyBatch)?;
    let seq_len = first.ids.len();
    if seq_len == 0 || seq_len > config.max_positions {
        return Err(ModelError::BadInput {
            row: 0,
            detail: format!("sequence length {seq_len} outside 1..={}", config.max_positions),
        });
    }
    let mut out = BatchInputs {
        batch: batch.len(),
        seq_len,
        ids: Vec::with_capacity(batch.len() * seq_len),
        segments: Vec::with_capacity(batch.len() * seq_len),
        positions: Vec::with_capacity(batch.len() * seq_len),
        mask: Vec::with_capacity(batch.len() * seq_len),
    };
    for (row, enc) in batch.iter().enumerate() {
        if enc.ids.len() != seq_len || enc.segment_ids.len() != seq_len || enc.attention_mask.len() != seq_len {
            return Err(ModelError::BadInput {
                row,
                detail: format!("ids, segment ids and mask must all have length {seq_len}"),
            });
        }
        for p in 0..seq_len {
            let id = enc.ids[p];
            if id as usize >= config.vocab_size {
                return Err(ModelError::TokenOutOfRange {
                    id,
                    row,
                    position: p,
                    vocab_size: config.vocab_size,
                });
            }
            let seg = enc.segment_ids[p] as usize;
            if seg >= config.type_vocab_size {
                return Err(ModelError::BadInput {
                    row,
                    detail: format!("segment id {seg} at position {p}"),
                });
            }
            out.ids.push(id as usize);
            out.segments.push(seg);
            out.positions.push(p);
            out.mask.push(enc.attention_mask[p] != 0);
        }
    }
    Ok(out)
}

pub struct ForwardOutput {
    /// `[B, T]`
    pub start_logits: Var,
    /// `[B, T]`
    pub end_logits: Var,
    /// Per layer, `[B, A, T, T]` post-softmax attention (before dropout).
    pub attention: Vec<Var>,
}

/// Seed for one dropout site, mixed from the run seed, the optimizer step,
/// the layer and the site within the layer.
pub fn dropout_seed(seed: u64, step: u64, layer: usize, site: usize) -> u64 {
    let mut z = seed
        ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (layer as u64 + 1).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (site as u64 + 1).wrapping_mul(0x1656_67B1_9E37_79F9);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Records the forward pass on `tape`. `weights` are the parameter vars
/// already placed on the same tape. `training` enables dropout, seeded
/// through [`dropout_seed`] from `seed` and `step`.
pub fn forward(
    tape: &mut Tape,
    weights: &Params<Var>,
    config: &ModelConfig,
    inputs: &BatchInputs,
    training: bool,
    seed: u64,
    step: u64,
) -> Result<ForwardOutput, ModelError> {
    let (b, t, h) = (inputs.batch, inputs.seq_len, config.hidden_size);
    let (heads, d) = (config.num_heads, config.head_dim());
    let rate = config.dropout_rate;
    let emb_layer = config.num_layers;

    let tok = tape.embedding(weights.token_embedding, &inputs.ids, &[b, t])?;
    let pos = tape.embedding(weights.position_embedding, &inputs.positions, &[b, t])?;
    let seg = tape.embedding(weights.segment_embedding, &inputs.segments, &[b, t])?;
    let x = tape.add(tok, pos)?;
    let x = tape.add(x, seg)?;
    let x = tape.layer_norm(x, weights.embedding_ln_gain, weights.embedding_ln_bias, LAYER_NORM_EPS)?;
    let mut x = tape.dropout(x, rate, training, dropout_seed(seed, step, emb_layer, 0))?;

    let mut mask = vec![0.0; b * heads * t * t];
    for row in 0..b {
        for key in 0..t {
            if !inputs.mask[row * t + key] {
                for hq in 0..heads * t {
                    mask[((row * heads * t) + hq) * t + key] = MASK_VALUE;
                }
            }
        }
    }
    let mask = tape.constant(Tensor::new(vec![b, heads, t, t], mask)?);
    let scale = 1.0 / (d as f64).sqrt();

    let mut attention = Vec::with_capacity(config.num_layers);
    for (l, layer) in weights.layers.iter().enumerate() {
        let split_heads = |tape: &mut Tape, w: Var, bias: Var, x: Var| -> Result<Var, ModelError> {
            let y = tape.matmul(x, w)?;
            let y = tape.add(y, bias)?;
            let y = tape.reshape(y, &[b, t, heads, d])?;
            Ok(tape.permute(y, &[0, 2, 1, 3])?)
        };
        let q = split_heads(tape, layer.query_weight, layer.query_bias, x)?;
        let k = split_heads(tape, layer.key_weight, layer.key_bias, x)?;
        let v = split_heads(tape, layer.value_weight, layer.value_bias, x)?;
        let kt = tape.permute(k, &[0, 1, 3, 2])?;
        let scores = tape.matmul(q, kt)?;
        let scores = tape.scale(scores, scale);
        let scores = tape.add(scores, mask)?;
        let probs = tape.softmax(scores)?;
        attention.push(probs);
        let probs = tape.dropout(probs, rate, training, dropout_seed(seed, step, l, 0))?;
        let ctx = tape.matmul(probs, v)?;
        let ctx = tape.permute(ctx, &[0, 2, 1, 3])?;
        let ctx = tape.reshape(ctx, &[b, t, h])?;
        let out = tape.matmul(ctx, layer.output_weight)?;
        let out = tape.add(out, layer.output_bias)?;
        let out = tape.dropout(out, rate, training, dropout_seed(seed, step, l, 1))?;
        let res = tape.add(x, out)?;
        let x1 = tape.layer_norm(res, layer.attention_ln_gain, layer.attention_ln_bias, LAYER_NORM_EPS)?;

        let ff = tape.matmul(x1, layer.ff_in_weight)?;
        let ff = tape.add(ff, layer.ff_in_bias)?;
        let ff = tape.gelu(ff);
        let ff = tape.matmul(ff, layer.ff_out_weight)?;
        let ff = tape.add(ff, layer.ff_out_bias)?;
        let ff = tape.dropout(ff, rate, training, dropout_seed(seed, step, l, 2))?;
        let res = tape.add(x1, ff)?;
        x = tape.layer_norm(res, layer.ff_ln_gain, layer.ff_ln_bias, LAYER_NORM_EPS)?;
    }

    let logits = tape.matmul(x, weights.qa_weight)?;
    let logits = tape.add(logits, weights.qa_bias)?;
    let start_logits = tape.select_last(logits, 0)?;
    let end_logits = tape.select_last(logits, 1)?;
    Ok(ForwardOutput {
        start_logits,
        end_logits,
        attention,
    })
}

/// Start and end logits of one window.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowLogits {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

/// Inference-mode forward pass: no dropout, no gradient bookkeeping.
pub fn infer_logits(
    weights: &ModelWeights,
    config: &ModelConfig,
    batch: &[&Encoding],
) -> Result<Vec<WindowLogits>, ModelError> {
    let inputs = batch_inputs(config, batch)?;
    let mut tape = Tape::new();
    let vars = weights.map(|_, w| tape.constant(w.clone()));
    let out = forward(&mut tape, &vars, config, &inputs, false, 0, 0)?;
    let t = inputs.seq_len;
    let (s, e) = (tape.value(out.start_logits).data(), tape.value(out.end_logits).data());
    Ok((0..inputs.batch)
        .map(|r| WindowLogits {
            start: s[r * t..(r + 1) * t].to_vec(),
            end: e[r * t..(r + 1) * t].to_vec(),
        })
        .collect())
}

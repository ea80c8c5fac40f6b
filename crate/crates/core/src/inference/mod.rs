//! Answer prediction: windowed forward passes, legal span decoding and
//! aggregation of candidates across windows.

mod decode;

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::encoder::{infer_logits, ModelConfig, ModelError, ModelWeights, WindowLogits};
use crate::text::{char_slice, nfc};
use crate::tokenizer::{encode_pair, Encoding, TokenizerError, Vocabulary};
use crate::training::{Checkpoint, TrainError, WEIGHTS_FILE};

pub use decode::{decode_span, top_spans, DecodedSpan};

pub const DEFAULT_MAX_ANSWER_TOKENS: usize = 30;

#[derive(Debug, thiserror::Error)]
pub enum InferenceError {
    #[error("no legal answer position")]
    NoLegalPosition,
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Checkpoint(#[from] TrainError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub text: String,
    /// Code-point offsets into the NFC context.
    pub char_start: usize,
    pub char_end: usize,
    /// Start logit plus end logit.
    pub score: f64,
    pub window_index: usize,
}

/// Trained weights with everything needed to encode inputs.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub weights: ModelWeights,
    pub vocab: Vocabulary,
    pub max_len: usize,
    pub doc_stride: usize,
    /// Short content hash of the weights file, or "untrained".
    pub model_id: String,
}

impl Model {
    pub fn load(dir: &Path) -> Result<Self, InferenceError> {
        let ckpt = Checkpoint::load(dir)?;
        let path = dir.join(WEIGHTS_FILE);
        let bytes = fs::read(&path).map_err(|e| TrainError::Io { path, source: e })?;
        let digest = hex::encode(Sha256::digest(&bytes));
        Ok(Self {
            config: ckpt.manifest.model,
            weights: ckpt.weights,
            vocab: ckpt.vocab,
            max_len: ckpt.manifest.train.max_len,
            doc_stride: ckpt.manifest.train.doc_stride,
            model_id: digest[..12].to_string(),
        })
    }

    pub fn encode(&self, question: &str, context: &str) -> Result<Vec<Encoding>, InferenceError> {
        Ok(encode_pair(question, context, &self.vocab, self.max_len, self.doc_stride)?)
    }

    /// Logits for every window, dropout off.
    pub fn window_logits(&self, windows: &[Encoding]) -> Result<Vec<WindowLogits>, InferenceError> {
        let refs: Vec<&Encoding> = windows.iter().collect();
        Ok(infer_logits(&self.weights, &self.config, &refs)?)
    }

    /// Ranked answers for `question` over `context` (NFC-normalized first;
    /// offsets refer to the normalized text).
    pub fn predict(
        &self,
        context: &str,
        question: &str,
        k: usize,
        max_answer_tokens: usize,
    ) -> Result<Vec<Prediction>, InferenceError> {
        if k == 0 {
            return Err(InferenceError::InvalidArgument("k must be at least 1".into()));
        }
        let context = nfc(context);
        let question = nfc(question);
        let windows = self.encode(&question, &context)?;
        let logits = self.window_logits(&windows)?;
        rank_candidates(&context, &windows, &logits, k, max_answer_tokens)
    }
}

/// Merges per-window top spans into one list: identical character spans keep
/// their best score; order is score descending, then earlier span.
pub fn rank_candidates(
    context: &str,
    windows: &[Encoding],
    logits: &[WindowLogits],
    k: usize,
    max_answer_tokens: usize,
) -> Result<Vec<Prediction>, InferenceError> {
    let mut best: HashMap<(usize, usize), Prediction> = HashMap::new();
    for (w, (enc, l)) in windows.iter().zip(logits).enumerate() {
        let spans = match top_spans(&l.start, &l.end, &enc.legal_mask(), max_answer_tokens, k) {
            Ok(s) => s,
            // a window with no context tokens contributes nothing
            Err(InferenceError::NoLegalPosition) => continue,
            Err(e) => return Err(e),
        };
        for span in spans {
            let (Some(first), Some(last)) = (enc.offsets[span.start], enc.offsets[span.end]) else {
                unreachable!("legal positions carry offsets");
            };
            let key = (first.start, last.end);
            let text = char_slice(context, key.0, key.1).expect("offsets lie inside the context");
            let candidate = Prediction {
                text: text.to_string(),
                char_start: key.0,
                char_end: key.1,
                score: span.score,
                window_index: w,
            };
            tracing::debug!(window = w, start = key.0, end = key.1, score = span.score, "candidate");
            match best.get(&key) {
                Some(existing) if existing.score >= candidate.score => {}
                _ => {
                    best.insert(key, candidate);
                }
            }
        }
    }
    if best.is_empty() {
        return Err(InferenceError::NoLegalPosition);
    }
    let mut ranked: Vec<Prediction> = best.into_values().collect();
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.char_start.cmp(&b.char_start))
            .then(a.char_end.cmp(&b.char_end))
    });
    ranked.truncate(k);
    Ok(ranked)
}

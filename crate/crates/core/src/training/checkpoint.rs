//! Checkpoint directory: `manifest.json`, `weights.bin`, `vocab.txt`.
//!
//! `weights.bin` is the magic `BQA1` followed by tensors until end of file,
//! each as: name length (u32), UTF-8 name, rank (u32), dims (u64 each), then
//! the values as f64. All integers and floats little-endian, values row-major.
//! Model weights come first, then optimizer moments as `adam.m.<name>` and
//! `adam.v.<name>`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AdamState, TrainConfig, TrainError};
use crate::encoder::{ModelConfig, ModelWeights};
use crate::numerics::Tensor;
use crate::tokenizer::Vocabulary;

pub const MAGIC: &[u8; 4] = b"BQA1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const WEIGHTS_FILE: &str = "weights.bin";
pub const VOCAB_FILE: &str = "vocab.txt";
const FORMAT: &str = "bnqa-checkpoint";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

/// ChaCha8 position: enough to resume the shuffle stream exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: String,
    pub stream: u64,
    /// u128 word position, as a decimal string.
    pub word_pos: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub format_version: u32,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub vocab_file: String,
    pub vocab_hash: String,
    /// Optimizer updates applied.
    pub step: u64,
    /// Completed epochs.
    pub epoch: usize,
    /// Position inside the current epoch's order.
    pub cursor: usize,
    pub order: Vec<usize>,
    pub rng: RngState,
    /// Example-weighted loss accumulated so far in the current epoch.
    pub epoch_loss_sum: f64,
    pub epoch_losses: Vec<f64>,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub manifest: Manifest,
    pub weights: ModelWeights,
    pub adam: AdamState,
    pub vocab: Vocabulary,
}

fn corrupt(path: &Path, detail: impl Into<String>) -> TrainError {
    TrainError::Checkpoint {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

pub fn encode_tensors<'a>(tensors: impl IntoIterator<Item = (&'a str, &'a Tensor)>) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    for (name, t) in tensors {
        out.extend((name.len() as u32).to_le_bytes());
        out.extend(name.as_bytes());
        out.extend((t.rank() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend((d as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend(v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or("truncated tensor data")?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_tensors(bytes: &[u8]) -> Result<Vec<(String, Tensor)>, String> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err("missing BQA1 magic".into());
    }
    let mut r = Reader { bytes, at: 4 };
    let mut out = Vec::new();
    while r.at < bytes.len() {
        let name_len = r.u32()? as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec()).map_err(|_| "tensor name is not UTF-8")?;
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let count = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| format!("{name}: shape overflows"))?;
        let data = r
            .take(count)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push((name, Tensor::new(shape, data).map_err(|e| e.to_string())?));
    }
    Ok(out)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), TrainError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| TrainError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| TrainError::io(path, e))
}

impl Checkpoint {
    /// Writes the directory; the manifest goes last so a complete manifest
    /// implies complete weights.
    pub fn save(&self, dir: &Path) -> Result<PathBuf, TrainError> {
        fs::create_dir_all(dir).map_err(|e| TrainError::io(dir, e))?;
        let mut names: Vec<String> = Vec::new();
        let mut tensors: Vec<&Tensor> = Vec::new();
        for (name, t) in self.weights.named() {
            names.push(name);
            tensors.push(t);
        }
        for (prefix, moments) in [("adam.m.", &self.adam.m), ("adam.v.", &self.adam.v)] {
            for (name, t) in moments.named() {
                names.push(format!("{prefix}{name}"));
                tensors.push(t);
            }
        }
        let bytes = encode_tensors(names.iter().map(String::as_str).zip(tensors.iter().copied()));
        write_atomic(&dir.join(WEIGHTS_FILE), &bytes)?;
        write_atomic(&dir.join(VOCAB_FILE), self.vocab.to_text().as_bytes())?;
        let mut manifest = self.manifest.clone();
        manifest.format = FORMAT.into();
        manifest.format_version = 1;
        manifest.vocab_file = VOCAB_FILE.into();
        manifest.vocab_hash = self.vocab.content_hash();
        manifest.step = self.adam.step;
        manifest.tensors = names
            .iter()
            .zip(&tensors)
            .map(|(name, t)| TensorEntry {
                name: name.clone(),
                shape: t.shape().to_vec(),
            })
            .collect();
        let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        json.push('\n');
        write_atomic(&dir.join(MANIFEST_FILE), json.as_bytes())?;
        Ok(dir.to_path_buf())
    }

    pub fn load(dir: &Path) -> Result<Self, TrainError> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&manifest_path).map_err(|e| TrainError::io(&manifest_path, e))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| corrupt(&manifest_path, e.to_string()))?;
        if manifest.format != FORMAT || manifest.format_version != 1 {
            return Err(corrupt(&manifest_path, "unsupported checkpoint format"));
        }
        manifest
            .model
            .validate()
            .map_err(|e| corrupt(&manifest_path, e.to_string()))?;

        let vocab_path = dir.join(&manifest.vocab_file);
        let vocab = Vocabulary::load(&vocab_path).map_err(|e| corrupt(&vocab_path, e.to_string()))?;
        if vocab.content_hash() != manifest.vocab_hash {
            return Err(corrupt(&vocab_path, "vocabulary hash does not match the manifest"));
        }
        if vocab.len() != manifest.model.vocab_size {
            return Err(corrupt(&vocab_path, "vocabulary size does not match the model config"));
        }

        let weights_path = dir.join(WEIGHTS_FILE);
        let bytes = fs::read(&weights_path).map_err(|e| TrainError::io(&weights_path, e))?;
        let tensors = decode_tensors(&bytes).map_err(|e| corrupt(&weights_path, e))?;
        let index: Vec<TensorEntry> = tensors
            .iter()
            .map(|(name, t)| TensorEntry {
                name: name.clone(),
                shape: t.shape().to_vec(),
            })
            .collect();
        if index != manifest.tensors {
            return Err(corrupt(&weights_path, "tensor index does not match the manifest"));
        }
        let mut by_name: HashMap<String, Tensor> = tensors.into_iter().collect();
        let template = ModelWeights::zeros(&manifest.model);
        let mut fill = |prefix: &str| -> Result<ModelWeights, TrainError> {
            template.try_map(|name, t| {
                let key = format!("{prefix}{name}");
                let found = by_name
                    .remove(&key)
                    .ok_or_else(|| corrupt(&weights_path, format!("missing tensor {key}")))?;
                if found.shape() != t.shape() {
                    return Err(corrupt(
                        &weights_path,
                        format!("{key}: shape {:?}, expected {:?}", found.shape(), t.shape()),
                    ));
                }
                Ok(found)
            })
        };
        let weights = fill("")?;
        let m = fill("adam.m.")?;
        let v = fill("adam.v.")?;
        if let Some(extra) = by_name.keys().next() {
            return Err(corrupt(&weights_path, format!("unexpected tensor {extra}")));
        }
        let adam = AdamState {
            m,
            v,
            step: manifest.step,
        };
        Ok(Self {
            manifest,
            weights,
            adam,
            vocab,
        })
    }
}

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    build_examples, optimizer_step, qa_loss, AdamState, Checkpoint, Manifest, RngState, SkippedQuestion, TrainConfig,
    TrainError, TrainingExample,
};
use crate::corpus::QaDataset;
use crate::encoder::{batch_inputs, forward, ModelConfig, ModelWeights};
use crate::numerics::{Tape, Tensor};
use crate::tokenizer::{Encoding, Vocabulary};

/// Offset between the weight-init seed and the shuffle stream seed.
const SHUFFLE_SEED_OFFSET: u64 = 0x5EED;

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub loss: f64,
    pub grad_norm: f64,
    /// Mean example loss of the epoch this step completed, if any.
    pub epoch_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub mean_loss: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainReport {
    pub examples: usize,
    pub skipped: Vec<SkippedQuestion>,
    pub dropped_windows: usize,
    pub steps: u64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epochs: Vec<EpochReport>,
    pub seconds: f64,
    pub checkpoint: Option<PathBuf>,
}

/// Training state that can be checkpointed mid-epoch and resumed exactly.
pub struct Trainer {
    model_config: ModelConfig,
    config: TrainConfig,
    vocab: Vocabulary,
    weights: ModelWeights,
    adam: AdamState,
    examples: Vec<TrainingExample>,
    rng: ChaCha8Rng,
    epoch: usize,
    cursor: usize,
    order: Vec<usize>,
    epoch_loss_sum: f64,
    epoch_losses: Vec<f64>,
}

impl Trainer {
    /// Fresh run. The vocabulary fixes `vocab_size` and the training config
    /// supplies the dropout rate.
    pub fn new(
        mut model_config: ModelConfig,
        config: TrainConfig,
        vocab: Vocabulary,
        examples: Vec<TrainingExample>,
    ) -> Result<Self, TrainError> {
        config.validate()?;
        model_config.vocab_size = vocab.len();
        model_config.dropout_rate = config.dropout_rate;
        model_config.validate()?;
        if config.max_len > model_config.max_positions {
            return Err(TrainError::Config(format!(
                "max_len {} exceeds max_positions {}",
                config.max_len, model_config.max_positions
            )));
        }
        check_examples(&examples, config.max_len)?;
        let weights = ModelWeights::init(&model_config, config.seed)?;
        let adam = AdamState::new(&weights);
        let rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(SHUFFLE_SEED_OFFSET));
        Ok(Self {
            model_config,
            config,
            vocab,
            weights,
            adam,
            examples,
            rng,
            epoch: 0,
            cursor: 0,
            order: Vec::new(),
            epoch_loss_sum: 0.0,
            epoch_losses: Vec::new(),
        })
    }

    /// Continues from a checkpoint with the same examples it was trained on.
    /// `epochs` may be raised to extend the run.
    pub fn resume(checkpoint: Checkpoint, examples: Vec<TrainingExample>, epochs: Option<usize>) -> Result<Self, TrainError> {
        let Checkpoint {
            manifest,
            weights,
            adam,
            vocab,
        } = checkpoint;
        let mut config = manifest.train;
        if let Some(e) = epochs {
            config.epochs = e;
        }
        config.validate()?;
        check_examples(&examples, config.max_len)?;
        if manifest.order.len() > examples.len() || manifest.order.iter().any(|&i| i >= examples.len()) {
            return Err(TrainError::Config("checkpoint order does not fit the example set".into()));
        }
        let bad_rng = || TrainError::Config("malformed rng state in checkpoint".into());
        let seed: [u8; 32] = hex::decode(&manifest.rng.seed)
            .ok()
            .and_then(|b| b.try_into().ok())
            .ok_or_else(bad_rng)?;
        let word_pos: u128 = manifest.rng.word_pos.parse().map_err(|_| bad_rng())?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(manifest.rng.stream);
        rng.set_word_pos(word_pos);
        Ok(Self {
            model_config: manifest.model,
            config,
            vocab,
            weights,
            adam,
            examples,
            rng,
            epoch: manifest.epoch,
            cursor: manifest.cursor,
            order: manifest.order,
            epoch_loss_sum: manifest.epoch_loss_sum,
            epoch_losses: manifest.epoch_losses,
        })
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }

    pub fn model_config(&self) -> &ModelConfig {
        &self.model_config
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn step_count(&self) -> u64 {
        self.adam.step
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    pub fn epoch_losses(&self) -> &[f64] {
        &self.epoch_losses
    }

    pub fn is_finished(&self) -> bool {
        self.epoch >= self.config.epochs
    }

    /// One optimizer update on the next batch; a new epoch order is drawn
    /// when the previous one is exhausted.
    pub fn step(&mut self) -> Result<StepOutcome, TrainError> {
        let n = self.examples.len();
        if self.cursor == 0 {
            self.order = (0..n).collect();
            self.order.shuffle(&mut self.rng);
            self.epoch_loss_sum = 0.0;
        }
        let end = (self.cursor + self.config.batch_size).min(n);
        let batch: Vec<&TrainingExample> = self.order[self.cursor..end].iter().map(|&i| &self.examples[i]).collect();
        let encodings: Vec<&Encoding> = batch.iter().map(|e| &e.encoding).collect();
        let starts: Vec<usize> = batch.iter().map(|e| e.token_start).collect();
        let ends: Vec<usize> = batch.iter().map(|e| e.token_end).collect();
        let inputs = batch_inputs(&self.model_config, &encodings)?;

        let mut tape = Tape::new();
        let vars = self.weights.map(|_, t| tape.param(t.clone()));
        let out = forward(&mut tape, &vars, &self.model_config, &inputs, true, self.config.seed, self.adam.step)?;
        let loss = qa_loss(&mut tape, out.start_logits, out.end_logits, &starts, &ends)?;
        let loss_value = tape.value(loss).item()?;
        if !loss_value.is_finite() {
            return Err(TrainError::NonFiniteLoss { step: self.adam.step + 1 });
        }
        tape.backward(loss)?;
        let grads = vars.map(|_, &v| {
            let shape = tape.value(v).shape().to_vec();
            match tape.take_grad(v) {
                Some(g) => Tensor::new(shape, g).expect("gradient matches its parameter"),
                None => Tensor::zeros(&shape),
            }
        });
        let stats = optimizer_step(&mut self.weights, &grads, &mut self.adam, &self.config)?;

        self.epoch_loss_sum += loss_value * batch.len() as f64;
        self.cursor = end;
        let mut epoch_loss = None;
        if self.cursor == n {
            let mean = self.epoch_loss_sum / n as f64;
            self.epoch_losses.push(mean);
            self.epoch += 1;
            self.cursor = 0;
            self.order.clear();
            self.epoch_loss_sum = 0.0;
            epoch_loss = Some(mean);
        }
        Ok(StepOutcome {
            loss: loss_value,
            grad_norm: stats.grad_norm,
            epoch_loss,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let manifest = Manifest {
            format: String::new(),
            format_version: 0,
            model: self.model_config.clone(),
            train: self.config.clone(),
            vocab_file: String::new(),
            vocab_hash: String::new(),
            step: self.adam.step,
            epoch: self.epoch,
            cursor: self.cursor,
            order: self.order.clone(),
            rng: RngState {
                seed: hex::encode(self.rng.get_seed()),
                stream: self.rng.get_stream(),
                word_pos: self.rng.get_word_pos().to_string(),
            },
            epoch_loss_sum: self.epoch_loss_sum,
            epoch_losses: self.epoch_losses.clone(),
            tensors: Vec::new(),
        };
        Checkpoint {
            manifest,
            weights: self.weights.clone(),
            adam: self.adam.clone(),
            vocab: self.vocab.clone(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf, TrainError> {
        self.checkpoint().save(dir)
    }

    /// Runs the remaining epochs, overwriting the checkpoint in `dir` after
    /// each one.
    pub fn run(&mut self, dir: Option<&Path>) -> Result<(f64, f64, Vec<EpochReport>), TrainError> {
        let mut initial = None;
        let mut last = f64::NAN;
        let mut reports = Vec::new();
        let mut epoch_start = Instant::now();
        while !self.is_finished() {
            let out = self.step()?;
            initial.get_or_insert(out.loss);
            last = out.loss;
            if let Some(mean_loss) = out.epoch_loss {
                if let Some(dir) = dir {
                    self.save(dir)?;
                }
                let seconds = epoch_start.elapsed().as_secs_f64();
                tracing::info!(epoch = self.epoch, mean_loss, seconds, "epoch finished");
                reports.push(EpochReport {
                    epoch: self.epoch,
                    mean_loss,
                    seconds,
                });
                epoch_start = Instant::now();
            }
        }
        Ok((initial.unwrap_or(f64::NAN), last, reports))
    }
}

fn check_examples(examples: &[TrainingExample], max_len: usize) -> Result<(), TrainError> {
    if examples.is_empty() {
        return Err(TrainError::NoExamples);
    }
    for e in examples {
        let enc = &e.encoding;
        if enc.max_len() != max_len
            || e.token_start > e.token_end
            || !enc.is_context(e.token_start)
            || !enc.is_context(e.token_end)
        {
            return Err(TrainError::Config(format!(
                "example for {} does not match max_len {max_len} or has an invalid gold span",
                e.qa_id
            )));
        }
    }
    Ok(())
}

/// Builds examples from `ds` and trains a fresh model for `config.epochs`.
pub fn train(
    ds: &QaDataset,
    vocab: &Vocabulary,
    model_config: &ModelConfig,
    config: &TrainConfig,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainReport, TrainError> {
    config.validate()?;
    let start = Instant::now();
    let set = build_examples(ds, vocab, config.max_len, config.doc_stride)?;
    for s in &set.skipped {
        tracing::warn!(qa_id = %s.qa_id, reason = %s.reason, "question skipped");
    }
    let count = set.examples.len();
    let mut trainer = Trainer::new(model_config.clone(), config.clone(), vocab.clone(), set.examples)?;
    let (initial_loss, final_loss, epochs) = trainer.run(checkpoint_dir)?;
    Ok(TrainReport {
        examples: count,
        skipped: set.skipped,
        dropped_windows: set.dropped_windows,
        steps: trainer.step_count(),
        initial_loss,
        final_loss,
        epochs,
        seconds: start.elapsed().as_secs_f64(),
        checkpoint: checkpoint_dir.map(Path::to_path_buf),
    })
}

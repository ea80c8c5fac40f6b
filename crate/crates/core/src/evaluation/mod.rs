//! Exact match, token F1 and perplexity, and the evaluation report.

mod metrics;

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::QaDataset;
use crate::encoder::WindowLogits;
use crate::inference::{rank_candidates, InferenceError, Model};
use crate::numerics::softmax_in_place;
use crate::text::nfc;
use crate::tokenizer::{char_span_to_token_span, Encoding, TokenizerError};
use crate::training::answer_char_span;

pub use metrics::{exact_match, normalize_answer, perplexity, token_f1};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("probability at index {index} is zero; perplexity is infinite")]
    ZeroProbability { index: usize },
    #[error("probability {value} at index {index} exceeds 1")]
    ProbabilityAboveOne { index: usize, value: f64 },
    #[error("no probability events")]
    NoEvents,
    #[error("dataset has no questions")]
    EmptyDataset,
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleScore {
    pub qa_id: String,
    pub prediction: String,
    pub em: u8,
    pub f1: f64,
    /// The gold answer that gave the best F1 (first on ties).
    pub chosen_gold: String,
    /// Set when the gold span cannot be located in any window; such
    /// examples are scored but contribute no perplexity events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flagged: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub em: f64,
    pub f1: f64,
    /// `None` when no example yielded probability events.
    pub perplexity: Option<f64>,
    pub n: usize,
    pub per_example: Vec<ExampleScore>,
}

impl EvalReport {
    /// Aggregates per-example scores: macro averages × 100.
    pub fn from_scores(per_example: Vec<ExampleScore>, perplexity: Option<f64>) -> Self {
        let n = per_example.len();
        let denom = n.max(1) as f64;
        let em = 100.0 * per_example.iter().map(|e| f64::from(e.em)).sum::<f64>() / denom;
        let f1 = 100.0 * per_example.iter().map(|e| e.f1).sum::<f64>() / denom;
        Self {
            em,
            f1,
            perplexity,
            n,
            per_example,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), EvalError> {
        std::fs::write(path, self.to_json()).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ppl = self.perplexity.map_or_else(|| "n/a".to_string(), |p| format!("{p:.2}"));
        let rows = [
            ("Exact Match (EM)", format!("{:.2}%", self.em)),
            ("F1 Score", format!("{:.2}%", self.f1)),
            ("Perplexity", ppl),
        ];
        let rule = format!("+{}+{}+", "-".repeat(20), "-".repeat(12));
        writeln!(f, "{rule}")?;
        writeln!(f, "| {:<18} | {:<10} |", "Metric", "Value")?;
        writeln!(f, "{rule}")?;
        for (name, value) in rows {
            writeln!(f, "| {name:<18} | {value:<10} |")?;
        }
        writeln!(f, "{rule}")?;
        let flagged = self.per_example.iter().filter(|e| e.flagged.is_some()).count();
        write!(f, "{} questions, {} flagged", self.n, flagged)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut row = logits.to_vec();
    softmax_in_place(&mut row);
    row
}

/// Gold start and end probabilities in the first window containing the span.
fn gold_events(windows: &[Encoding], logits: &[WindowLogits], span: (usize, usize)) -> Option<[f64; 2]> {
    windows.iter().zip(logits).find_map(|(enc, l)| {
        let (s, e) = char_span_to_token_span(enc, span.0, span.1)?;
        Some([softmax(&l.start)[s], softmax(&l.end)[e]])
    })
}

struct Scored {
    score: ExampleScore,
    events: Option<[f64; 2]>,
}

fn score_question(
    model: &Model,
    context: &str,
    qa: &crate::corpus::QaPair,
    max_answer_tokens: usize,
) -> Result<Scored, EvalError> {
    let golds: Vec<&str> = qa.answers.iter().map(|a| a.text.as_str()).collect();
    let question = nfc(&qa.question);
    let (prediction, events, mut flag) = match model.encode(&question, context) {
        Ok(windows) => {
            let logits = model.window_logits(&windows)?;
            let prediction = match rank_candidates(context, &windows, &logits, 1, max_answer_tokens) {
                Ok(mut p) => p.remove(0).text,
                Err(InferenceError::NoLegalPosition) => String::new(),
                Err(e) => return Err(e.into()),
            };
            let span = qa
                .answers
                .first()
                .and_then(|a| answer_char_span(context, a.answer_start, &a.text));
            let events = span.and_then(|s| gold_events(&windows, &logits, s));
            let flag = events.is_none().then(|| "gold span not recoverable in any window".to_string());
            (prediction, events, flag)
        }
        Err(InferenceError::Tokenizer(e @ TokenizerError::QuestionTooLong { .. })) => {
            (String::new(), None, Some(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    if golds.is_empty() {
        flag.get_or_insert_with(|| "no gold answers".to_string());
    }
    let (mut best_f1, mut chosen) = (-1.0, String::new());
    for g in &golds {
        let f = token_f1(&prediction, &[g]);
        if f > best_f1 {
            best_f1 = f;
            chosen = g.to_string();
        }
    }
    Ok(Scored {
        score: ExampleScore {
            qa_id: qa.id.clone(),
            em: exact_match(&prediction, &golds),
            f1: best_f1.max(0.0),
            chosen_gold: chosen,
            prediction,
            flagged: flag,
        },
        events,
    })
}

/// Top-1 prediction for every question, scored against all its golds.
pub fn evaluate(model: &Model, ds: &QaDataset, max_answer_tokens: usize) -> Result<EvalReport, EvalError> {
    let jobs: Vec<(String, &crate::corpus::QaPair)> = ds
        .paragraphs()
        .into_iter()
        .flat_map(|(_, p)| {
            let context = nfc(&p.context);
            p.qas.iter().map(move |qa| (context.clone(), qa))
        })
        .collect();
    if jobs.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let scored: Vec<Scored> = jobs
        .par_iter()
        .map(|(context, qa)| score_question(model, context, qa, max_answer_tokens))
        .collect::<Result<_, _>>()?;
    let events: Vec<f64> = scored.iter().filter_map(|s| s.events).flatten().collect();
    let ppl = if events.is_empty() {
        None
    } else {
        Some(perplexity(&events)?)
    };
    Ok(EvalReport::from_scores(
        scored.into_iter().map(|s| s.score).collect(),
        ppl,
    ))
}

#[cfg(test)]
mod tests;

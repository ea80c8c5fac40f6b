use std::collections::HashMap;

use super::EvalError;
use crate::text::{collapse_whitespace, is_punctuation, nfc};

/// NFC, punctuation and danda removed, whitespace collapsed and trimmed.
pub fn normalize_answer(text: &str) -> String {
    let stripped: String = nfc(text).chars().filter(|&c| !is_punctuation(c)).collect();
    collapse_whitespace(&stripped)
}

/// 1 when the normalized prediction equals any normalized gold.
pub fn exact_match<S: AsRef<str>>(pred: &str, golds: &[S]) -> u8 {
    let p = normalize_answer(pred);
    u8::from(golds.iter().any(|g| normalize_answer(g.as_ref()) == p))
}

fn f1_single(pred: &[&str], gold: &[&str]) -> f64 {
    if pred.is_empty() || gold.is_empty() {
        return if pred.is_empty() && gold.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in gold {
        *counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in pred {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / pred.len() as f64;
    let recall = overlap as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Multiset token-overlap F1 on normalized text, max over golds. 0 for an
/// empty gold list.
pub fn token_f1<S: AsRef<str>>(pred: &str, golds: &[S]) -> f64 {
    let p = normalize_answer(pred);
    let pred_tokens: Vec<&str> = p.split_whitespace().collect();
    golds
        .iter()
        .map(|g| {
            let g = normalize_answer(g.as_ref());
            let gold_tokens: Vec<&str> = g.split_whitespace().collect();
            f1_single(&pred_tokens, &gold_tokens)
        })
        .fold(0.0, f64::max)
}

/// `2^(−(1/N)·Σ log2 p_i)`.
pub fn perplexity(probs: &[f64]) -> Result<f64, EvalError> {
    if probs.is_empty() {
        return Err(EvalError::NoEvents);
    }
    for (index, &p) in probs.iter().enumerate() {
        if p.is_nan() || p <= 0.0 {
            return Err(EvalError::ZeroProbability { index });
        }
        if p > 1.0 {
            return Err(EvalError::ProbabilityAboveOne { index, value: p });
        }
    }
    let mean_log2 = probs.iter().map(|p| p.log2()).sum::<f64>() / probs.len() as f64;
    Ok((-mean_log2).exp2())
}

//! Question + context packing into fixed-length windows.
//!
//! Layout of every window:
//!
//! ```text
//! [CLS] q1 .. qn [SEP] c_w .. c_(w+len-1) [SEP] [PAD] ..
//!   0   <---- segment 0 ---->  <------ segment 1 ----->  0
//! ```
//!
//! Context windows start at token `0, stride, 2·stride, …` and the last window
//! is the first one that reaches the final context token.

use serde::{Deserialize, Serialize};

use super::pretokenize::pre_tokenize;
use super::vocab::{Vocabulary, CLS_ID, PAD_ID, SEP_ID, UNK_ID};
use super::wordpiece::segment;
use super::TokenizerError;

/// Code-point span `[start, end)` into the context.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoding {
    pub ids: Vec<u32>,
    pub segment_ids: Vec<u32>,
    pub attention_mask: Vec<u32>,
    /// Context span per position; `None` for specials, question and padding.
    pub offsets: Vec<Option<CharSpan>>,
    /// Index (among all context tokens) of the first context token here.
    pub window_start: usize,
    /// Sequence position of the first context token.
    pub context_start: usize,
    /// Number of context tokens in this window.
    pub context_len: usize,
}

impl Encoding {
    pub fn max_len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_context(&self, position: usize) -> bool {
        position >= self.context_start && position < self.context_start + self.context_len
    }

    pub fn context_positions(&self) -> std::ops::Range<usize> {
        self.context_start..self.context_start + self.context_len
    }

    /// `true` at context positions: the only legal answer boundaries.
    pub fn legal_mask(&self) -> Vec<bool> {
        (0..self.max_len()).map(|p| self.is_context(p)).collect()
    }
}

/// A token with its code-point span in the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Token {
    pub id: u32,
    pub span: CharSpan,
}

/// Pre-tokenizes and segments `text`, tracking the span of every piece. A
/// word without a decomposition becomes one `[UNK]` covering the word.
pub fn tokenize(text: &str, vocab: &Vocabulary) -> Vec<Token> {
    let mut tokens = Vec::new();
    for word in pre_tokenize(text) {
        match segment(word.text, vocab) {
            Some(pieces) => {
                let mut at = word.start;
                for (id, len) in pieces {
                    tokens.push(Token {
                        id,
                        span: CharSpan {
                            start: at,
                            end: at + len,
                        },
                    });
                    at += len;
                }
            }
            None => tokens.push(Token {
                id: UNK_ID,
                span: CharSpan {
                    start: word.start,
                    end: word.end,
                },
            }),
        }
    }
    tokens
}

/// Context-token start indices of the windows covering `n` tokens.
pub fn window_starts(n: usize, cap: usize, stride: usize) -> Vec<usize> {
    let stride = stride.min(cap).max(1);
    let mut starts = vec![0];
    let mut start = 0;
    while start + cap < n {
        start += stride;
        starts.push(start);
    }
    starts
}

/// Encodes a question against a context into one or more windows.
pub fn encode_pair(
    question: &str,
    context: &str,
    vocab: &Vocabulary,
    max_len: usize,
    doc_stride: usize,
) -> Result<Vec<Encoding>, TokenizerError> {
    if doc_stride == 0 {
        return Err(TokenizerError::InvalidArgument("doc_stride must be at least 1".into()));
    }
    let question_ids: Vec<u32> = tokenize(question, vocab).into_iter().map(|t| t.id).collect();
    if max_len < 4 || question_ids.len() > max_len - 4 {
        return Err(TokenizerError::QuestionTooLong {
            tokens: question_ids.len(),
            max_len,
        });
    }
    let context_tokens = tokenize(context, vocab);
    let context_start = question_ids.len() + 2;
    let cap = max_len - question_ids.len() - 3;

    let encodings = window_starts(context_tokens.len(), cap, doc_stride)
        .into_iter()
        .map(|window_start| {
            let window = &context_tokens[window_start..(window_start + cap).min(context_tokens.len())];
            let mut ids = Vec::with_capacity(max_len);
            let mut segment_ids = Vec::with_capacity(max_len);
            let mut offsets = Vec::with_capacity(max_len);
            ids.push(CLS_ID);
            ids.extend(&question_ids);
            ids.push(SEP_ID);
            segment_ids.resize(ids.len(), 0);
            offsets.resize(ids.len(), None);
            for t in window {
                ids.push(t.id);
                segment_ids.push(1);
                offsets.push(Some(t.span));
            }
            ids.push(SEP_ID);
            segment_ids.push(1);
            offsets.push(None);
            let real = ids.len();
            ids.resize(max_len, PAD_ID);
            segment_ids.resize(max_len, 0);
            offsets.resize(max_len, None);
            let attention_mask = (0..max_len).map(|p| u32::from(p < real)).collect();
            Encoding {
                ids,
                segment_ids,
                attention_mask,
                offsets,
                window_start,
                context_start,
                context_len: window.len(),
            }
        })
        .collect();
    Ok(encodings)
}

/// Smallest token range of `enc` covering the code-point span
/// `[char_start, char_end)`, or `None` when the span is not fully inside
/// this window's context tokens.
pub fn char_span_to_token_span(enc: &Encoding, char_start: usize, char_end: usize) -> Option<(usize, usize)> {
    if char_start >= char_end {
        return None;
    }
    let mut first = None;
    let mut last = None;
    for (p, span) in enc.offsets.iter().enumerate() {
        let Some(span) = span else { continue };
        if span.start <= char_start {
            first = Some(p);
        }
        if last.is_none() && span.end >= char_end {
            last = Some(p);
        }
    }
    match (first, last) {
        (Some(s), Some(e)) if s <= e => Some((s, e)),
        _ => None,
    }
}

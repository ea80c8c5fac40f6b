use serde::Serialize;

use crate::corpus::QaDataset;
use crate::text::{char_len, char_slice};
use crate::tokenizer::{char_span_to_token_span, encode_pair, Encoding, TokenizerError, Vocabulary};

/// One window with the token span of the supervising answer inside it.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample {
    pub qa_id: String,
    pub encoding: Encoding,
    pub token_start: usize,
    pub token_end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SkippedQuestion {
    pub qa_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct ExampleSet {
    pub examples: Vec<TrainingExample>,
    /// Questions that produced no example at all.
    pub skipped: Vec<SkippedQuestion>,
    /// Windows dropped because the answer lies outside them.
    pub dropped_windows: usize,
}

/// Code-point span of an answer when it matches the context verbatim.
pub fn answer_char_span(context: &str, answer_start: usize, text: &str) -> Option<(usize, usize)> {
    let end = answer_start + char_len(text);
    (!text.is_empty() && char_slice(context, answer_start, end) == Some(text)).then_some((answer_start, end))
}

/// One example per window holding the first listed answer; windows without
/// it are dropped.
pub fn build_examples(
    ds: &QaDataset,
    vocab: &Vocabulary,
    max_len: usize,
    doc_stride: usize,
) -> Result<ExampleSet, TokenizerError> {
    let mut set = ExampleSet::default();
    for (_, paragraph) in ds.paragraphs() {
        for qa in &paragraph.qas {
            let skip = |reason: &str| SkippedQuestion {
                qa_id: qa.id.clone(),
                reason: reason.to_string(),
            };
            let Some(answer) = qa.answers.first() else {
                set.skipped.push(skip("no answers"));
                continue;
            };
            let Some((cs, ce)) = answer_char_span(&paragraph.context, answer.answer_start, &answer.text) else {
                set.skipped.push(skip("answer text not found at its offset"));
                continue;
            };
            let encodings = match encode_pair(&qa.question, &paragraph.context, vocab, max_len, doc_stride) {
                Ok(e) => e,
                Err(e @ TokenizerError::QuestionTooLong { .. }) => {
                    set.skipped.push(skip(&e.to_string()));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let before = set.examples.len();
            for encoding in encodings {
                match char_span_to_token_span(&encoding, cs, ce) {
                    Some((token_start, token_end)) => set.examples.push(TrainingExample {
                        qa_id: qa.id.clone(),
                        encoding,
                        token_start,
                        token_end,
                    }),
                    None => set.dropped_windows += 1,
                }
            }
            if set.examples.len() == before {
                set.skipped.push(skip("answer not contained in any window"));
            }
        }
    }
    Ok(set)
}

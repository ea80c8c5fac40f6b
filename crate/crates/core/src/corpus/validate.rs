use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::dataset::QaDataset;
use crate::text::{char_len, char_slice, is_nfc_text};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    /// The answer text is not found at `answer_start` in the context.
    OffsetMismatch,
    DupId,
    EmptyQuestion,
    EmptyContext,
    NotNfc,
    /// Context contains a control character other than newline.
    ControlChar,
    /// Context has leading or trailing whitespace.
    UntrimmedContext,
    /// Paragraph has no question-answer pairs.
    NoQuestions,
    /// Question has an empty answers list.
    NoAnswers,
    EmptyAnswer,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::OffsetMismatch => "OFFSET_MISMATCH",
            Self::DupId => "DUP_ID",
            Self::EmptyQuestion => "EMPTY_QUESTION",
            Self::EmptyContext => "EMPTY_CONTEXT",
            Self::NotNfc => "NOT_NFC",
            Self::ControlChar => "CONTROL_CHAR",
            Self::UntrimmedContext => "UNTRIMMED_CONTEXT",
            Self::NoQuestions => "NO_QUESTIONS",
            Self::NoAnswers => "NO_ANSWERS",
            Self::EmptyAnswer => "EMPTY_ANSWER",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationError {
    /// Question id, or paragraph id for paragraph-level problems.
    pub subject: String,
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<ValidationError>,
    pub paragraphs: usize,
    pub questions: usize,
    pub answers: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn codes(&self) -> Vec<ErrorCode> {
        self.errors.iter().map(|e| e.code).collect()
    }

    fn push(&mut self, subject: &str, code: ErrorCode, message: String) {
        self.errors.push(ValidationError {
            subject: subject.to_string(),
            code,
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "{}\t{}\t{}", e.code, e.subject, e.message)?;
        }
        write!(
            f,
            "{} errors ({} paragraphs, {} questions, {} answers)",
            self.errors.len(),
            self.paragraphs,
            self.questions,
            self.answers
        )
    }
}

/// Checks every dataset invariant and reports each violation.
///
/// A paragraph with an empty context only reports `EMPTY_CONTEXT`; its
/// answers are not offset-checked.
pub fn validate(ds: &QaDataset) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen_ids = HashSet::new();

    for (pid, paragraph) in ds.paragraphs() {
        report.paragraphs += 1;
        let context = paragraph.context.as_str();
        let empty_context = context.trim().is_empty();
        if empty_context {
            report.push(&pid, ErrorCode::EmptyContext, "context is empty".into());
        } else {
            if !is_nfc_text(context) {
                report.push(&pid, ErrorCode::NotNfc, "context is not NFC-normalized".into());
            }
            if let Some(c) = context.chars().find(|&c| c.is_control() && c != '\n') {
                report.push(
                    &pid,
                    ErrorCode::ControlChar,
                    format!("context contains control character U+{:04X}", c as u32),
                );
            }
            if context.trim() != context {
                report.push(
                    &pid,
                    ErrorCode::UntrimmedContext,
                    "context has leading or trailing whitespace".into(),
                );
            }
        }
        if paragraph.qas.is_empty() {
            report.push(&pid, ErrorCode::NoQuestions, "paragraph has no questions".into());
        }

        let context_len = char_len(context);
        for qa in &paragraph.qas {
            report.questions += 1;
            report.answers += qa.answers.len();
            if !seen_ids.insert(qa.id.as_str()) {
                report.push(&qa.id, ErrorCode::DupId, format!("question id {:?} repeated", qa.id));
            }
            if qa.question.trim().is_empty() {
                report.push(&qa.id, ErrorCode::EmptyQuestion, "question is empty".into());
            }
            if qa.answers.is_empty() {
                report.push(&qa.id, ErrorCode::NoAnswers, "question has no answers".into());
            }
            if empty_context {
                continue;
            }
            for (ai, answer) in qa.answers.iter().enumerate() {
                if answer.text.is_empty() {
                    report.push(&qa.id, ErrorCode::EmptyAnswer, format!("answer {ai} is empty"));
                    continue;
                }
                let end = answer.answer_start + char_len(&answer.text);
                let found = char_slice(context, answer.answer_start, end);
                if found != Some(answer.text.as_str()) {
                    let message = match found {
                        Some(f) => format!(
                            "answer {ai} {:?} at {} does not match context text {:?}",
                            answer.text, answer.answer_start, f
                        ),
                        None => format!(
                            "answer {ai} {:?} at {} runs past the context end ({context_len})",
                            answer.text, answer.answer_start
                        ),
                    };
                    report.push(&qa.id, ErrorCode::OffsetMismatch, message);
                }
            }
        }
    }
    report
}

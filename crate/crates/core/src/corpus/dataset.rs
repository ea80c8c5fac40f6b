//! SQuAD v1.1 shaped dataset model and its JSON file format.
//!
//! ```text
//! {"version": "1.1",
//!  "data": [{"title": ..., "paragraphs": [
//!     {"context": ..., "qas": [
//!        {"id": ..., "question": ..., "answers": [{"text": ..., "answer_start": ...}]}]}]}]}
//! ```
//!
//! `answer_start` is a Unicode code-point index into the (NFC) context, not a
//! byte offset. Paragraphs may carry an optional `"id"`; when absent the id is
//! derived from the paragraph's position (`a{article}-p{paragraph}`).
//!
//! Canonical serialization writes keys in sorted order with two-space
//! indentation and a trailing newline, so `save(load(file))` reproduces a
//! canonical file byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;

pub const SQUAD_VERSION: &str = "1.1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSpan {
    pub answer_start: usize,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub answers: Vec<AnswerSpan>,
    pub id: String,
    pub question: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub context: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub qas: Vec<QaPair>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub paragraphs: Vec<Paragraph>,
    pub title: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaDataset {
    pub data: Vec<Article>,
    pub version: String,
}

impl Default for QaDataset {
    fn default() -> Self {
        Self {
            data: Vec::new(),
            version: SQUAD_VERSION.to_string(),
        }
    }
}

impl Paragraph {
    pub fn resolved_id(&self, article: usize, index: usize) -> String {
        self.id
            .clone()
            .unwrap_or_else(|| derived_paragraph_id(article, index))
    }
}

pub fn derived_paragraph_id(article: usize, index: usize) -> String {
    format!("a{article}-p{index}")
}

impl QaDataset {
    pub fn from_json_str(s: &str) -> Result<Self, CorpusError> {
        serde_json::from_str(s).map_err(|e| CorpusError::Format(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let bytes = fs::read(path).map_err(|e| CorpusError::io(path, e))?;
        let text = String::from_utf8(bytes).map_err(|_| CorpusError::Encoding(path.to_path_buf()))?;
        Self::from_json_str(&text)
    }

    pub fn to_canonical_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("dataset serializes");
        out.push('\n');
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        fs::write(path, self.to_canonical_json()).map_err(|e| CorpusError::io(path, e))
    }

    /// Every paragraph in file order with its resolved id.
    pub fn paragraphs(&self) -> Vec<(String, &Paragraph)> {
        self.data
            .iter()
            .enumerate()
            .flat_map(|(ai, article)| {
                article
                    .paragraphs
                    .iter()
                    .enumerate()
                    .map(move |(pi, p)| (p.resolved_id(ai, pi), p))
            })
            .collect()
    }

    pub fn paragraph_count(&self) -> usize {
        self.data.iter().map(|a| a.paragraphs.len()).sum()
    }

    pub fn question_count(&self) -> usize {
        self.data
            .iter()
            .flat_map(|a| &a.paragraphs)
            .map(|p| p.qas.len())
            .sum()
    }

    /// Looks up a paragraph by resolved id.
    pub fn find_paragraph(&self, id: &str) -> Option<&Paragraph> {
        self.paragraphs()
            .into_iter()
            .find(|(pid, _)| pid == id)
            .map(|(_, p)| p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> QaDataset {
        QaDataset {
            version: "1.1".into(),
            data: vec![Article {
                title: "খুলনা".into(),
                paragraphs: vec![Paragraph {
                    context: "খুলনা প্রকৌশল বিশ্ববিদ্যালয়".into(),
                    id: None,
                    qas: vec![QaPair {
                        id: "q1".into(),
                        question: "কোথায়?".into(),
                        answers: vec![AnswerSpan {
                            text: "খুলনা".into(),
                            answer_start: 0,
                        }],
                    }],
                }],
            }],
        }
    }

    #[test]
    fn canonical_layout_is_sorted_and_unescaped() {
        let json = sample().to_canonical_json();
        let data_pos = json.find("\"data\"").unwrap();
        let version_pos = json.find("\"version\"").unwrap();
        assert!(data_pos < version_pos);
        let start = json.find("\"answer_start\"").unwrap();
        let text = json.find("\"text\"").unwrap();
        assert!(start < text);
        assert!(json.contains("খুলনা"));
        assert!(json.ends_with("}\n"));
        assert!(!json.contains("\"id\": null"));
    }

    #[test]
    fn extra_squad_fields_are_ignored_on_load() {
        let s = r#"{"version":"1.1","data":[{"title":"t","paragraphs":[{"context":"abc",
            "qas":[{"id":"x","question":"q","answers":[{"text":"b","answer_start":1}],"is_impossible":false}]}]}]}"#;
        let ds = QaDataset::from_json_str(s).unwrap();
        assert_eq!(ds.question_count(), 1);
    }

    #[test]
    fn negative_offsets_are_a_format_error() {
        let s = r#"{"version":"1.1","data":[{"title":"t","paragraphs":[{"context":"abc",
            "qas":[{"id":"x","question":"q","answers":[{"text":"b","answer_start":-1}]}]}]}]}"#;
        assert!(matches!(QaDataset::from_json_str(s), Err(CorpusError::Format(_))));
    }

    #[test]
    fn derived_paragraph_ids() {
        let mut ds = sample();
        ds.data[0].paragraphs.push(Paragraph {
            context: "x".into(),
            id: Some("custom".into()),
            qas: vec![],
        });
        let ids: Vec<String> = ds.paragraphs().into_iter().map(|(id, _)| id).collect();
        assert_eq!(ids, vec!["a0-p0".to_string(), "custom".to_string()]);
        assert!(ds.find_paragraph("custom").is_some());
        assert!(ds.find_paragraph("nope").is_none());
    }

    fn arb_text() -> impl Strategy<Value = String> {
        proptest::string::string_regex("[a-z ক-হা-ৌ।\"\\\\]{0,12}").unwrap()
    }

    proptest! {
        #[test]
        fn canonical_serialization_round_trips(
            contexts in proptest::collection::vec((arb_text(), proptest::option::of("[a-z0-9]{1,4}"),
                proptest::collection::vec((arb_text(), arb_text(), 0usize..50), 0..3)), 0..4),
            title in arb_text(),
        ) {
            let ds = QaDataset {
                version: "1.1".into(),
                data: vec![Article {
                    title,
                    paragraphs: contexts.into_iter().enumerate().map(|(i, (context, id, qas))| Paragraph {
                        context,
                        id,
                        qas: qas.into_iter().enumerate().map(|(j, (q, a, s))| QaPair {
                            id: format!("{i}-{j}"),
                            question: q,
                            answers: vec![AnswerSpan { text: a, answer_start: s }],
                        }).collect(),
                    }).collect(),
                }],
            };
            let bytes = ds.to_canonical_json();
            let back = QaDataset::from_json_str(&bytes).unwrap();
            prop_assert_eq!(&back, &ds);
            prop_assert_eq!(back.to_canonical_json(), bytes);
        }
    }
}

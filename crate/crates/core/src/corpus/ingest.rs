use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::html::html_to_text;
use super::CorpusError;
use crate::text::{collapse_whitespace, nfc};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocumentKind {
    Html,
    Plain,
}

impl DocumentKind {
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("html" | "htm" | "xhtml") => Self::Html,
            _ => Self::Plain,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawDocument {
    pub source_id: String,
    pub content: String,
    pub kind: DocumentKind,
}

/// A cleaned passage. `text` is NFC, trimmed, single-spaced and free of
/// control characters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextParagraph {
    pub id: String,
    pub text: String,
    pub source_id: String,
}

#[derive(Debug, Default)]
pub struct IngestOutcome {
    pub documents: Vec<RawDocument>,
    pub failures: Vec<(PathBuf, CorpusError)>,
}

/// Reads each file as one document. Failures are collected per file and do
/// not stop the remaining files.
pub fn ingest<P: AsRef<Path>>(paths: &[P]) -> IngestOutcome {
    let mut outcome = IngestOutcome::default();
    for path in paths {
        let path = path.as_ref();
        match read_document(path) {
            Ok(doc) => outcome.documents.push(doc),
            Err(e) => outcome.failures.push((path.to_path_buf(), e)),
        }
    }
    outcome
}

fn read_document(path: &Path) -> Result<RawDocument, CorpusError> {
    let bytes = fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    let content = String::from_utf8(bytes).map_err(|_| CorpusError::Encoding(path.to_path_buf()))?;
    let source_id = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(RawDocument {
        source_id,
        content,
        kind: DocumentKind::from_path(path),
    })
}

/// Lists the regular files of a directory in name order.
pub fn list_corpus_dir(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CorpusError::io(dir, e))? {
        let entry = entry.map_err(|e| CorpusError::io(dir, e))?;
        if entry.file_type().map(|t| t.is_file()).unwrap_or(false) {
            paths.push(entry.path());
        }
    }
    paths.sort();
    Ok(paths)
}

/// Splits a document into normalized paragraphs: blank lines separate
/// paragraphs in plain text, block-level elements in HTML.
pub fn clean(doc: &RawDocument) -> Vec<ContextParagraph> {
    let text = match doc.kind {
        DocumentKind::Html => html_to_text(&doc.content),
        DocumentKind::Plain => doc.content.clone(),
    };
    split_paragraphs(&text)
        .into_iter()
        .enumerate()
        .map(|(i, text)| ContextParagraph {
            id: format!("{}#{}", doc.source_id, i),
            text,
            source_id: doc.source_id.clone(),
        })
        .collect()
}

fn split_paragraphs(text: &str) -> Vec<String> {
    let normalized = text.replace("\r\n", "\n").replace('\r', "\n");
    let mut paragraphs = Vec::new();
    let mut block = String::new();
    for line in normalized.split('\n') {
        if line.trim().is_empty() {
            flush(&mut block, &mut paragraphs);
        } else {
            block.push_str(line);
            block.push('\n');
        }
    }
    flush(&mut block, &mut paragraphs);
    paragraphs
}

fn flush(block: &mut String, out: &mut Vec<String>) {
    let cleaned = normalize_paragraph(block);
    block.clear();
    if !cleaned.is_empty() {
        out.push(cleaned);
    }
}

/// NFC, control characters removed, whitespace collapsed and trimmed.
pub fn normalize_paragraph(s: &str) -> String {
    let composed = nfc(s);
    let visible: String = composed
        .chars()
        .map(|c| if c.is_whitespace() { ' ' } else { c })
        .filter(|c| !c.is_control())
        .collect();
    collapse_whitespace(&visible)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(s: &str) -> RawDocument {
        RawDocument {
            source_id: "d.txt".into(),
            content: s.into(),
            kind: DocumentKind::Plain,
        }
    }

    fn texts(ps: Vec<ContextParagraph>) -> Vec<String> {
        ps.into_iter().map(|p| p.text).collect()
    }

    #[test]
    fn ingest_reads_files_and_reports_failures() {
        let dir = tempfile::tempdir().unwrap();
        let txt = dir.path().join("a.txt");
        let html = dir.path().join("a.html");
        let bad = dir.path().join("bad.txt");
        fs::write(&txt, "hello").unwrap();
        fs::write(&html, "<p>hi</p>").unwrap();
        fs::write(&bad, [0xff, 0xfe, 0x00]).unwrap();
        let missing = dir.path().join("missing.txt");

        let out = ingest(&[&txt, &html, &bad, &missing]);
        assert_eq!(
            out.documents,
            vec![
                RawDocument { source_id: "a.txt".into(), content: "hello".into(), kind: DocumentKind::Plain },
                RawDocument { source_id: "a.html".into(), content: "<p>hi</p>".into(), kind: DocumentKind::Html },
            ]
        );
        assert_eq!(out.failures.len(), 2);
        assert!(matches!(out.failures[0].1, CorpusError::Encoding(_)));
        assert_eq!(out.failures[1].0, missing);
        assert!(matches!(out.failures[1].1, CorpusError::Io { .. }));
    }

    #[test]
    fn missing_path_only() {
        let out = ingest(&[Path::new("/definitely/not/here.txt")]);
        assert!(out.documents.is_empty());
        assert_eq!(out.failures.len(), 1);
    }

    #[test]
    fn clean_html_splits_on_blocks() {
        let doc = RawDocument {
            source_id: "p.html".into(),
            content: "<p>a b</p><p>c</p>".into(),
            kind: DocumentKind::Html,
        };
        let ps = clean(&doc);
        assert_eq!(ps[0].id, "p.html#0");
        assert_eq!(texts(ps), vec!["a b", "c"]);
    }

    #[test]
    fn clean_plain_splits_on_blank_lines_and_trims() {
        assert_eq!(texts(clean(&plain("x\n\n y "))), vec!["x", "y"]);
        assert!(clean(&plain("")).is_empty());
        assert_eq!(texts(clean(&plain("a\nb\r\n  \r\nc\u{7}d\t e"))), vec!["a b", "cd e"]);
    }

    #[test]
    fn clean_composes_to_nfc() {
        // e + combining acute
        let ps = clean(&plain("cafe\u{301}"));
        assert_eq!(ps[0].text, "caf\u{e9}");
    }

    #[test]
    fn clean_is_idempotent_on_its_output() {
        let doc = plain("  প্রথম   অনুচ্ছেদ।\nদ্বিতীয় লাইন\n\n\n  শেষ  \n\n");
        let first = texts(clean(&doc));
        let again = texts(clean(&plain(&first.join("\n\n"))));
        assert_eq!(first, again);
    }
}

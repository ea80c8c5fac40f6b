//! Document ingestion, paragraph cleaning, and the SQuAD-style dataset with
//! its validator, splitter and statistics.

pub mod dataset;
mod html;
mod ingest;
mod split;
mod validate;

use std::path::{Path, PathBuf};

pub use dataset::{AnswerSpan, Article, Paragraph, QaDataset, QaPair};
pub use ingest::{clean, ingest, list_corpus_dir, normalize_paragraph, ContextParagraph, DocumentKind, IngestOutcome, RawDocument};
pub use split::{split, stats, DatasetStats, Summary};
pub use validate::{validate, ErrorCode, ValidationError, ValidationReport};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: not valid UTF-8")]
    Encoding(PathBuf),
    #[error("malformed dataset JSON: {0}")]
    Format(String),
    #[error("cannot split: {0}")]
    Split(String),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

//! WordPiece vocabulary construction and question/context encoding with
//! token → code-point offset maps.
//!
//! No lowercasing or accent stripping happens here: inputs are expected to be
//! NFC already and every offset refers to that text.

mod encode;
mod pretokenize;
mod vocab;
mod wordpiece;

use std::path::{Path, PathBuf};

pub use encode::{char_span_to_token_span, encode_pair, tokenize, window_starts, CharSpan, Encoding, Token};
pub use pretokenize::{pre_tokenize, Word};
pub use vocab::{
    build_vocab, Vocabulary, CLS, CLS_ID, CONTINUATION, ESCAPE, PAD, PAD_ID, SEP, SEP_ID, SPECIALS, UNK, UNK_ID,
};
pub use wordpiece::wordpiece;

pub const DEFAULT_MAX_LEN: usize = 128;
pub const DEFAULT_DOC_STRIDE: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum TokenizerError {
    #[error("vocabulary size {max_size} cannot hold the specials and character pieces; need at least {minimum}")]
    VocabularyTooSmall { max_size: usize, minimum: usize },
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("question has {tokens} tokens; max_len {max_len} allows at most max_len - 4")]
    QuestionTooLong { tokens: usize, max_len: usize },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl TokenizerError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[cfg(test)]
mod tests;

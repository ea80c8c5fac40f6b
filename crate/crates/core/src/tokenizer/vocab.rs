use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::pretokenize::pre_tokenize;
use super::TokenizerError;

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;
pub const SPECIALS: [&str; 4] = [PAD, UNK, CLS, SEP];

pub const CONTINUATION: &str = "##";
/// Prefix for whole-word pieces that would otherwise start with `##`.
pub const ESCAPE: char = '\u{E000}';

/// Vocabulary key for a word-initial piece.
pub(crate) fn initial_key(piece: &str) -> String {
    if piece.starts_with(CONTINUATION) {
        format!("{ESCAPE}{piece}")
    } else {
        piece.to_string()
    }
}

/// WordPiece vocabulary; the id of a piece is its position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    pieces: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_pieces(pieces: Vec<String>) -> Result<Self, TokenizerError> {
        for (id, special) in SPECIALS.iter().enumerate() {
            if pieces.get(id).map(String::as_str) != Some(*special) {
                return Err(TokenizerError::InvalidVocabulary(format!(
                    "expected {special} at id {id}"
                )));
            }
        }
        let mut index = HashMap::with_capacity(pieces.len());
        for (id, piece) in pieces.iter().enumerate() {
            if piece.is_empty() || piece.chars().any(char::is_whitespace) {
                return Err(TokenizerError::InvalidVocabulary(format!(
                    "piece {id} is empty or contains whitespace"
                )));
            }
            if index.insert(piece.clone(), id as u32).is_some() {
                return Err(TokenizerError::InvalidVocabulary(format!(
                    "duplicate piece {piece:?} at id {id}"
                )));
            }
        }
        Ok(Self { pieces, index })
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn id(&self, piece: &str) -> Option<u32> {
        self.index.get(piece).copied()
    }

    pub fn piece(&self, id: u32) -> Option<&str> {
        self.pieces.get(id as usize).map(String::as_str)
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    /// Text surface of a piece: continuation and escape prefixes removed.
    pub fn surface(&self, id: u32) -> Option<&str> {
        let piece = self.piece(id)?;
        if SPECIALS.contains(&piece) {
            return Some("");
        }
        Some(
            piece
                .strip_prefix(CONTINUATION)
                .or_else(|| piece.strip_prefix(ESCAPE))
                .unwrap_or(piece),
        )
    }

    /// One piece per line; line number is the id.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for piece in &self.pieces {
            out.push_str(piece);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TokenizerError> {
        let body = text.strip_suffix('\n').unwrap_or(text);
        Self::from_pieces(body.split('\n').map(str::to_string).collect())
    }

    pub fn save(&self, path: &Path) -> Result<(), TokenizerError> {
        fs::write(path, self.to_text()).map_err(|e| TokenizerError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, TokenizerError> {
        let bytes = fs::read(path).map_err(|e| TokenizerError::io(path, e))?;
        let text = String::from_utf8(bytes).map_err(|_| {
            TokenizerError::InvalidVocabulary(format!("{} is not UTF-8", path.display()))
        })?;
        Self::from_text(&text)
    }

    /// SHA-256 of the vocabulary file contents, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

/// Builds a vocabulary from raw texts.
///
/// Layout: the four specials, then every character seen (as `c` and `##c`,
/// ordered by code point), then whole words of two or more characters with
/// frequency ≥ `min_freq`, ordered by (frequency desc, text asc) and cut off
/// at `max_size`. The character pieces guarantee any word from these texts
/// decomposes without `[UNK]`.
pub fn build_vocab<'a, I>(texts: I, max_size: usize, min_freq: usize) -> Result<Vocabulary, TokenizerError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut chars = BTreeSet::new();
    let mut freq: HashMap<String, usize> = HashMap::new();
    for text in texts {
        for word in pre_tokenize(text) {
            chars.extend(word.text.chars());
            *freq.entry(word.text.to_string()).or_insert(0) += 1;
        }
    }

    let minimum = SPECIALS.len() + 2 * chars.len();
    if max_size < minimum {
        return Err(TokenizerError::VocabularyTooSmall {
            max_size,
            minimum,
        });
    }

    let mut pieces: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
    for c in &chars {
        pieces.push(initial_key(&c.to_string()));
        pieces.push(format!("{CONTINUATION}{c}"));
    }

    let mut words: Vec<(String, usize)> = freq
        .into_iter()
        .filter(|(w, n)| *n >= min_freq.max(1) && w.chars().count() > 1)
        .collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    for (word, _) in words {
        if pieces.len() >= max_size {
            break;
        }
        pieces.push(initial_key(&word));
    }
    Vocabulary::from_pieces(pieces)
}

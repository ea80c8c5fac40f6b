//! Unicode helpers shared by cleaning, tokenization and scoring.
//!
//! Every offset in this crate counts Unicode code points of NFC text.

use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::{is_nfc, UnicodeNormalization};

/// Bengali danda, the sentence terminator.
pub const DANDA: char = '\u{0964}';

/// Punctuation: any general category P* plus the danda.
pub fn is_punctuation(c: char) -> bool {
    c == DANDA
        || matches!(
            get_general_category(c),
            GeneralCategory::ConnectorPunctuation
                | GeneralCategory::DashPunctuation
                | GeneralCategory::OpenPunctuation
                | GeneralCategory::ClosePunctuation
                | GeneralCategory::InitialPunctuation
                | GeneralCategory::FinalPunctuation
                | GeneralCategory::OtherPunctuation
        )
}

pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

pub fn is_nfc_text(s: &str) -> bool {
    is_nfc(s)
}

/// Collapses every whitespace run to one space and trims both ends.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Code-point slice `[start, end)`, or `None` when out of range.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = s.char_indices().map(|(i, _)| i).chain(std::iter::once(s.len()));
    let from = indices.nth(start)?;
    let to = if end == start {
        from
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&s[from..to])
}

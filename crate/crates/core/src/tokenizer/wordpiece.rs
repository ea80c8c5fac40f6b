use super::vocab::{initial_key, Vocabulary, CONTINUATION, UNK_ID};

/// Greedy longest-match-first segmentation of one word. Returns
/// `(id, char_len)` per piece, or `None` when some suffix cannot be matched.
pub(crate) fn segment(word: &str, vocab: &Vocabulary) -> Option<Vec<(u32, usize)>> {
    let chars: Vec<char> = word.chars().collect();
    let mut pieces = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut found = None;
        for end in (start + 1..=chars.len()).rev() {
            let candidate: String = chars[start..end].iter().collect();
            let key = if start == 0 {
                initial_key(&candidate)
            } else {
                format!("{CONTINUATION}{candidate}")
            };
            if let Some(id) = vocab.id(&key) {
                found = Some((id, end - start));
                break;
            }
        }
        let (id, len) = found?;
        pieces.push((id, len));
        start += len;
    }
    Some(pieces)
}

/// Piece ids for a single whitespace-free word; `[UNK]` alone when the word
/// has no decomposition.
pub fn wordpiece(word: &str, vocab: &Vocabulary) -> Vec<u32> {
    match segment(word, vocab) {
        Some(pieces) => pieces.into_iter().map(|(id, _)| id).collect(),
        None => vec![UNK_ID],
    }
}

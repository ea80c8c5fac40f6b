use crate::text::is_punctuation;

/// A whitespace/punctuation-delimited word with its code-point span.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Word<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

/// Splits on whitespace; every punctuation character is a word of its own.
pub fn pre_tokenize(text: &str) -> Vec<Word<'_>> {
    let mut words = Vec::new();
    // (byte offset, char index) where the pending word starts
    let mut pending: Option<(usize, usize)> = None;
    let mut char_idx = 0;
    for (byte, c) in text.char_indices() {
        let boundary = c.is_whitespace() || is_punctuation(c);
        if boundary {
            if let Some((b0, c0)) = pending.take() {
                words.push(Word { text: &text[b0..byte], start: c0, end: char_idx });
            }
            if !c.is_whitespace() {
                words.push(Word {
                    text: &text[byte..byte + c.len_utf8()],
                    start: char_idx,
                    end: char_idx + 1,
                });
            }
        } else if pending.is_none() {
            pending = Some((byte, char_idx));
        }
        char_idx += 1;
    }
    if let Some((b0, c0)) = pending {
        words.push(Word { text: &text[b0..], start: c0, end: char_idx });
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &str) -> Vec<(&str, usize, usize)> {
        pre_tokenize(s).into_iter().map(|w| (w.text, w.start, w.end)).collect()
    }

    #[test]
    fn whitespace_and_punctuation_boundaries() {
        assert_eq!(texts("ab cd"), vec![("ab", 0, 2), ("cd", 3, 5)]);
        assert_eq!(
            texts(" hi,there! "),
            vec![("hi", 1, 3), (",", 3, 4), ("there", 4, 9), ("!", 9, 10)]
        );
        assert!(texts("   ").is_empty());
    }

    #[test]
    fn bengali_danda_is_standalone() {
        assert_eq!(
            texts("খুলনা।কুয়েট"),
            vec![("খুলনা", 0, 5), ("।", 5, 6), ("কুয়েট", 6, 12)]
        );
    }
}

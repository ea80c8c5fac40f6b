use proptest::prelude::*;

use super::*;
use crate::text::char_slice;

/// Words drawn from Latin, Bengali (with vowel signs, virama, nukta),
/// combining accents, emoji ZWJ sequences and punctuation.
fn arb_text() -> impl Strategy<Value = String> {
    let atoms = prop_oneof![
        "[a-z]{1,6}",
        "[কখগঘচছজটডতদনপবমরলসহ][া-ৌ়্]?[কখগতনমর]?",
        Just("বিশ্ববিদ্যালয়".to_string()),
        Just("e\u{301}".to_string()),
        Just("👩\u{200d}💻".to_string()),
        "[।,.?!()\\-\"#]",
        Just("##x".to_string()),
        "[0-9০-৯]{1,3}",
    ];
    proptest::collection::vec((atoms, prop_oneof![Just(""), Just(" "), Just("  "), Just("\n")]), 1..40)
        .prop_map(|parts| parts.into_iter().map(|(a, s)| format!("{a}{s}")).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn offsets_slice_back_to_piece_surface(
        context in arb_text(),
        question in "[a-zকখগ ]{1,12}",
        max_len in 12usize..48,
        stride in 1usize..16,
    ) {
        let vocab = build_vocab([context.as_str(), question.as_str()], 100_000, 1).unwrap();
        let encs = match encode_pair(&question, &context, &vocab, max_len, stride) {
            Ok(e) => e,
            Err(TokenizerError::QuestionTooLong { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let total = tokenize(&context, &vocab).len();
        let mut covered = vec![false; total];
        for enc in &encs {
            prop_assert_eq!(enc.ids.len(), max_len);
            prop_assert_eq!(enc.segment_ids.len(), max_len);
            prop_assert_eq!(enc.attention_mask.len(), max_len);
            prop_assert_eq!(enc.offsets.len(), max_len);
            prop_assert!(!enc.ids.contains(&UNK_ID));
            let mut prev_end = 0;
            for p in 0..max_len {
                if let Some(span) = enc.offsets[p] {
                    prop_assert!(enc.is_context(p));
                    prop_assert_eq!(enc.attention_mask[p], 1);
                    prop_assert!(span.start >= prev_end, "overlap at {}", p);
                    prop_assert!(span.start < span.end);
                    prev_end = span.end;
                    let slice = char_slice(&context, span.start, span.end).unwrap();
                    prop_assert_eq!(slice, vocab.surface(enc.ids[p]).unwrap());
                }
            }
            for i in enc.window_start..enc.window_start + enc.context_len {
                covered[i] = true;
            }
        }
        prop_assert!(covered.into_iter().all(|c| c));
        prop_assert_eq!(encode_pair(&question, &context, &vocab, max_len, stride).unwrap(), encs);
    }

    #[test]
    fn wordpiece_pieces_concatenate_to_word(word in "[a-zক-হা-ৌ]{1,10}", corpus in arb_text()) {
        let vocab = build_vocab([corpus.as_str(), word.as_str()], 100_000, 1).unwrap();
        let ids = wordpiece(&word, &vocab);
        let joined: String = ids.iter().map(|&i| vocab.surface(i).unwrap()).collect();
        prop_assert_eq!(joined, word);
    }

    #[test]
    fn char_span_round_trips_through_token_span(context in arb_text(), pick in any::<prop::sample::Index>()) {
        let vocab = build_vocab([context.as_str()], 100_000, 1).unwrap();
        let enc = &encode_pair("", &context, &vocab, 4096, 4096).unwrap()[0];
        let positions: Vec<usize> = enc.context_positions().collect();
        prop_assume!(!positions.is_empty());
        let p = positions[pick.index(positions.len())];
        let span = enc.offsets[p].unwrap();
        prop_assert_eq!(char_span_to_token_span(enc, span.start, span.end), Some((p, p)));
    }
}

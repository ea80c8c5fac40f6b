use proptest::prelude::*;

use super::*;
use crate::encoder::{ModelConfig, ModelWeights};
use crate::training::tests::{dataset_vocab, tiny_dataset};

#[test]
fn normalization_examples() {
    assert_eq!(normalize_answer(" খুলনা। "), "খুলনা");
    assert_eq!(normalize_answer("a  b"), "a b");
    assert_eq!(normalize_answer(""), "");
    // punctuation between words leaves a single space
    assert_eq!(normalize_answer("ঢাকা ।  পদ্মা"), "ঢাকা পদ্মা");
    // decomposed input matches the composed form
    assert_eq!(normalize_answer("\u{09C7}\u{09BE}"), normalize_answer("\u{09CB}"));
}

#[test]
fn exact_match_examples() {
    assert_eq!(exact_match("খুলনা", &["খুলনা।"]), 1);
    assert_eq!(exact_match("x", &["y"]), 0);
    assert_eq!(exact_match("a b", &["c", "a  b"]), 1);
}

#[test]
fn f1_examples() {
    assert!((token_f1("a b", &["a b c"]) - 0.8).abs() < 1e-15);
    assert_eq!(token_f1("ঢাকা শহর", &["ঢাকা শহর"]), 1.0);
    assert_eq!(token_f1("x", &["y"]), 0.0);
    assert_eq!(token_f1("", &[""]), 1.0);
    assert_eq!(token_f1("।", &["a"]), 0.0);
    // multiset overlap: one shared "a", not two
    let f = token_f1("a a", &["a b"]);
    assert!((f - 0.5).abs() < 1e-15);
}

#[test]
fn perplexity_closed_forms() {
    assert_eq!(perplexity(&[1.0, 1.0]).unwrap(), 1.0);
    assert!((perplexity(&[0.5; 4]).unwrap() - 2.0).abs() < 1e-12);
    assert!((perplexity(&[0.125; 3]).unwrap() - 8.0).abs() < 1e-12);
    assert!(matches!(
        perplexity(&[0.5, 0.0]),
        Err(EvalError::ZeroProbability { index: 1 })
    ));
    assert!(matches!(
        perplexity(&[1.5]),
        Err(EvalError::ProbabilityAboveOne { index: 0, .. })
    ));
    assert!(matches!(perplexity(&[]), Err(EvalError::NoEvents)));
}

#[test]
fn report_averages() {
    let ex = |em: u8, f1: f64| ExampleScore {
        qa_id: "q".into(),
        prediction: String::new(),
        em,
        f1,
        chosen_gold: String::new(),
        flagged: None,
    };
    let r = EvalReport::from_scores(vec![ex(1, 1.0), ex(1, 1.0), ex(0, 0.5)], Some(2.0));
    assert!((r.em - 200.0 / 3.0).abs() < 1e-9);
    assert!((r.f1 - 250.0 / 3.0).abs() < 1e-9);
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    for key in ["em", "f1", "perplexity", "n", "per_example"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    let table = r.to_string();
    assert!(table.contains("Exact Match (EM)   | 66.67%"));
    assert!(table.contains("Perplexity         | 2.00"));
}

proptest! {
    #[test]
    fn exact_match_implies_full_f1(pred in "[a-c ।,]{0,8}", gold in "[a-c ।,]{0,8}") {
        if exact_match(&pred, &[&gold]) == 1 {
            prop_assert_eq!(token_f1(&pred, &[&gold]), 1.0);
        }
        let f = token_f1(&pred, &[&gold]);
        prop_assert!((0.0..=1.0).contains(&f));
        if !normalize_answer(&pred).is_empty() && !normalize_answer(&gold).is_empty() {
            prop_assert_eq!(f, token_f1(&gold, &[&pred]));
        }
    }

    #[test]
    fn constant_perplexity_is_reciprocal(p in 1e-6f64..=1.0, n in 1usize..50) {
        prop_assert!((perplexity(&vec![p; n]).unwrap() - 1.0 / p).abs() <= 1e-9 * (1.0 / p));
    }
}

#[test]
fn evaluate_scores_every_question() {
    let ds = tiny_dataset();
    let vocab = dataset_vocab(&ds);
    let config = ModelConfig {
        num_layers: 1,
        hidden_size: 16,
        num_heads: 2,
        ff_size: 24,
        vocab_size: vocab.len(),
        max_positions: 48,
        type_vocab_size: 2,
        dropout_rate: 0.0,
    };
    let model = Model {
        weights: ModelWeights::init(&config, 3).unwrap(),
        config,
        vocab,
        max_len: 48,
        doc_stride: 16,
        model_id: "untrained".into(),
    };
    let mut ds = ds;
    // an answer whose offset is wrong: scored, flagged, no perplexity events
    ds.data[0].paragraphs[0].qas[0].answers[0].answer_start += 1;
    let report = evaluate(&model, &ds, 30).unwrap();
    assert_eq!(report.n, 4);
    assert_eq!(report.per_example.iter().filter(|e| e.flagged.is_some()).count(), 1);
    assert!(report.per_example[0].flagged.is_some());
    let ppl = report.perplexity.unwrap();
    // untrained: gold probabilities are near uniform over the window
    assert!(ppl > 1.0 && ppl < 200.0, "{ppl}");
    assert!(report.per_example.iter().all(|e| f64::from(e.em) <= e.f1));
    assert_eq!(evaluate(&model, &ds, 30).unwrap(), report);
    assert!(matches!(
        evaluate(&model, &QaDataset::default(), 30),
        Err(EvalError::EmptyDataset)
    ));
}

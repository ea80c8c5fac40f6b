use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Article, QaDataset};
use super::CorpusError;
use crate::text::char_len;

/// Splits at paragraph granularity: `round(eval_fraction × paragraphs)`
/// paragraphs, chosen by a seeded shuffle, go to the eval half. Both halves
/// keep the original article grouping and order.
pub fn split(
    ds: &QaDataset,
    eval_fraction: f64,
    seed: u64,
) -> Result<(QaDataset, QaDataset), CorpusError> {
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(CorpusError::Split(format!(
            "eval fraction {eval_fraction} must lie strictly between 0 and 1"
        )));
    }
    let total = ds.paragraph_count();
    let eval_count = (eval_fraction * total as f64).round() as usize;
    if eval_count == 0 || eval_count >= total {
        return Err(CorpusError::Split(format!(
            "{total} paragraphs with fraction {eval_fraction} leaves an empty side \
             ({} train / {eval_count} eval)",
            total.saturating_sub(eval_count)
        )));
    }

    let mut positions: Vec<(usize, usize)> = ds
        .data
        .iter()
        .enumerate()
        .flat_map(|(ai, a)| (0..a.paragraphs.len()).map(move |pi| (ai, pi)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    positions.shuffle(&mut rng);
    let eval_set: HashSet<(usize, usize)> = positions[..eval_count].iter().copied().collect();

    let mut train = QaDataset {
        version: ds.version.clone(),
        data: Vec::new(),
    };
    let mut eval = train.clone();
    for (ai, article) in ds.data.iter().enumerate() {
        let mut to_train = Vec::new();
        let mut to_eval = Vec::new();
        for (pi, p) in article.paragraphs.iter().enumerate() {
            // Pin derived ids so they survive re-grouping.
            let mut p = p.clone();
            p.id = Some(p.resolved_id(ai, pi));
            if eval_set.contains(&(ai, pi)) {
                to_eval.push(p);
            } else {
                to_train.push(p);
            }
        }
        for (target, paragraphs) in [(&mut train, to_train), (&mut eval, to_eval)] {
            if !paragraphs.is_empty() {
                target.data.push(Article {
                    title: article.title.clone(),
                    paragraphs,
                });
            }
        }
    }
    Ok((train, eval))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: usize,
    pub mean: f64,
    pub max: usize,
}

impl Summary {
    fn of(values: &[usize]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        Self {
            min: *values.iter().min().unwrap(),
            max: *values.iter().max().unwrap(),
            mean: values.iter().sum::<usize>() as f64 / values.len() as f64,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub articles: usize,
    pub paragraphs: usize,
    pub questions: usize,
    pub answers: usize,
    pub questions_per_paragraph: Summary,
    /// Answer lengths in code points.
    pub answer_length: Summary,
    /// Answer length in code points → number of answers.
    pub answer_length_histogram: BTreeMap<usize, usize>,
}

pub fn stats(ds: &QaDataset) -> DatasetStats {
    let per_paragraph: Vec<usize> = ds
        .data
        .iter()
        .flat_map(|a| &a.paragraphs)
        .map(|p| p.qas.len())
        .collect();
    let answer_lengths: Vec<usize> = ds
        .data
        .iter()
        .flat_map(|a| &a.paragraphs)
        .flat_map(|p| &p.qas)
        .flat_map(|q| &q.answers)
        .map(|a| char_len(&a.text))
        .collect();
    let mut histogram = BTreeMap::new();
    for &len in &answer_lengths {
        *histogram.entry(len).or_insert(0) += 1;
    }
    DatasetStats {
        articles: ds.data.len(),
        paragraphs: per_paragraph.len(),
        questions: per_paragraph.iter().sum(),
        answers: answer_lengths.len(),
        questions_per_paragraph: Summary::of(&per_paragraph),
        answer_length: Summary::of(&answer_lengths),
        answer_length_histogram: histogram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::dataset::{AnswerSpan, Paragraph, QaPair};

    fn dataset(questions_per_paragraph: &[usize]) -> QaDataset {
        let paragraphs = questions_per_paragraph
            .iter()
            .enumerate()
            .map(|(i, &n)| Paragraph {
                context: format!("context {i}"),
                id: None,
                qas: (0..n)
                    .map(|j| QaPair {
                        id: format!("p{i}q{j}"),
                        question: "q".into(),
                        answers: vec![AnswerSpan {
                            text: "context".into(),
                            answer_start: 0,
                        }],
                    })
                    .collect(),
            })
            .collect();
        QaDataset {
            version: "1.1".into(),
            data: vec![Article {
                title: "t".into(),
                paragraphs,
            }],
        }
    }

    fn contexts(ds: &QaDataset) -> Vec<String> {
        ds.paragraphs().into_iter().map(|(_, p)| p.context.clone()).collect()
    }

    #[test]
    fn split_counts_and_disjointness() {
        let ds = dataset(&[2; 10]);
        let (train, eval) = split(&ds, 0.2, 7).unwrap();
        assert_eq!(train.paragraph_count(), 8);
        assert_eq!(eval.paragraph_count(), 2);
        let t: HashSet<String> = contexts(&train).into_iter().collect();
        let e: HashSet<String> = contexts(&eval).into_iter().collect();
        assert!(t.is_disjoint(&e));
        assert_eq!(t.len() + e.len(), 10);
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let ds = dataset(&[1; 10]);
        assert_eq!(split(&ds, 0.3, 7).unwrap(), split(&ds, 0.3, 7).unwrap());
        let ids = |seed| {
            let (_, e) = split(&ds, 0.3, seed).unwrap();
            contexts(&e)
        };
        assert!((0..20).any(|s| ids(s) != ids(7)));
    }

    #[test]
    fn split_pins_original_paragraph_ids() {
        let ds = dataset(&[1; 4]);
        let (train, eval) = split(&ds, 0.5, 1).unwrap();
        let mut all: Vec<String> = train
            .paragraphs()
            .into_iter()
            .chain(eval.paragraphs())
            .map(|(id, _)| id)
            .collect();
        all.sort();
        assert_eq!(all, vec!["a0-p0", "a0-p1", "a0-p2", "a0-p3"]);
    }

    #[test]
    fn split_rejects_empty_side() {
        assert!(split(&dataset(&[1]), 0.5, 0).is_err());
        assert!(split(&dataset(&[1; 10]), 0.01, 0).is_err());
        assert!(split(&dataset(&[1; 10]), 0.99, 0).is_err());
        assert!(split(&dataset(&[1; 10]), 1.0, 0).is_err());
    }

    #[test]
    fn stats_counts() {
        let s = stats(&dataset(&[2, 4]));
        assert_eq!(s.paragraphs, 2);
        assert_eq!(s.questions, 6);
        assert_eq!(
            s.questions_per_paragraph,
            Summary {
                min: 2,
                mean: 3.0,
                max: 4
            }
        );
        assert_eq!(s.answer_length_histogram.get(&7), Some(&6));
    }

    #[test]
    fn stats_of_empty_dataset() {
        let s = stats(&QaDataset::default());
        assert_eq!(s, DatasetStats::default());
    }

    #[test]
    fn stats_of_a_mixed_length_dataset() {
        let shape: Vec<usize> = (0..100).map(|i| 2 + i % 4).collect();
        let s = stats(&dataset(&shape));
        assert_eq!(s.paragraphs, 100);
        assert_eq!(s.questions_per_paragraph.min, 2);
        assert_eq!(s.questions_per_paragraph.max, 5);
    }
}

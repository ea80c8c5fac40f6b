use super::InferenceError;

/// A token span `[start, end]` (inclusive) with its score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecodedSpan {
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

fn check(start: &[f64], end: &[f64], legal: &[bool], max_answer_tokens: usize) -> Result<(), InferenceError> {
    if start.len() != end.len() || start.len() != legal.len() {
        return Err(InferenceError::InvalidArgument(format!(
            "logit and mask lengths differ: {}, {}, {}",
            start.len(),
            end.len(),
            legal.len()
        )));
    }
    if max_answer_tokens == 0 {
        return Err(InferenceError::InvalidArgument("max_answer_tokens must be at least 1".into()));
    }
    if !legal.iter().any(|&l| l) {
        return Err(InferenceError::NoLegalPosition);
    }
    Ok(())
}

/// Best pair `s ≤ e ≤ s + max_answer_tokens − 1` over legal positions by
/// `start[s] + end[e]`; ties go to the smaller `s`, then the smaller `e`.
pub fn decode_span(
    start: &[f64],
    end: &[f64],
    legal: &[bool],
    max_answer_tokens: usize,
) -> Result<DecodedSpan, InferenceError> {
    check(start, end, legal, max_answer_tokens)?;
    let mut best: Option<DecodedSpan> = None;
    for s in (0..start.len()).filter(|&s| legal[s]) {
        let last = (s + max_answer_tokens - 1).min(start.len() - 1);
        for e in (s..=last).filter(|&e| legal[e]) {
            let score = start[s] + end[e];
            // strict comparison keeps the first (smallest) pair on ties
            if best.map_or(true, |b| score > b.score) {
                best = Some(DecodedSpan { start: s, end: e, score });
            }
        }
    }
    Ok(best.expect("a legal position yields at least the pair (s, s)"))
}

/// The `k` best legal pairs, ordered by score descending, then `(s, e)`.
pub fn top_spans(
    start: &[f64],
    end: &[f64],
    legal: &[bool],
    max_answer_tokens: usize,
    k: usize,
) -> Result<Vec<DecodedSpan>, InferenceError> {
    check(start, end, legal, max_answer_tokens)?;
    let mut all = Vec::new();
    for s in (0..start.len()).filter(|&s| legal[s]) {
        let last = (s + max_answer_tokens - 1).min(start.len() - 1);
        for e in (s..=last).filter(|&e| legal[e]) {
            all.push(DecodedSpan {
                start: s,
                end: e,
                score: start[s] + end[e],
            });
        }
    }
    all.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.start.cmp(&b.start))
            .then(a.end.cmp(&b.end))
    });
    all.truncate(k);
    Ok(all)
}

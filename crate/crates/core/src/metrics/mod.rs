//! Automatic evaluation: perplexity, support-weighted precision/recall/F1,
//! corpus BLEU over pitch sequences and duration-of-word agreement.

mod evaluate;

pub use evaluate::{evaluate_model, EvalMode, EvalOptions, EvalReport, REFERENCE_RESULTS};

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;
use crate::score::{AlignedLine, ScoreError, TotalDuration};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("perplexity over zero tokens")]
    ZeroTokens,
    #[error("{what}: {expected} entries expected, {found} found")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{0}: empty input")]
    Empty(&'static str),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn same_len(what: &'static str, expected: usize, found: usize) -> Result<(), MetricsError> {
    if expected == found {
        Ok(())
    } else {
        Err(MetricsError::LengthMismatch { what, expected, found })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perplexity {
    pub pitch: f64,
    pub duration: f64,
    pub label: f64,
    /// `exp` of the NLL averaged over all three heads and every note.
    pub combined: f64,
}

/// Per-attribute perplexities from summed NLLs (pitch, duration, label)
/// over `tokens` notes.
pub fn perplexity(nll: [f64; 3], tokens: usize) -> Result<Perplexity, MetricsError> {
    if tokens == 0 {
        return Err(MetricsError::ZeroTokens);
    }
    let n = tokens as f64;
    Ok(Perplexity {
        pitch: (nll[0] / n).exp(),
        duration: (nll[1] / n).exp(),
        label: (nll[2] / n).exp(),
        combined: (nll.iter().sum::<f64>() / (3.0 * n)).exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 per class, averaged with weights equal to
/// each class's share of the gold labels. Undefined ratios count as 0.
pub fn weighted_prf<C: Eq + Hash>(predictions: &[C], golds: &[C]) -> Result<Prf, MetricsError> {
    same_len("weighted_prf", golds.len(), predictions.len())?;
    if golds.is_empty() {
        return Err(MetricsError::Empty("weighted_prf"));
    }
    // Per class in first-seen order: (true positives, predicted, gold).
    let mut index: HashMap<&C, usize> = HashMap::new();
    let mut counts: Vec<(usize, usize, usize)> = Vec::new();
    for (p, g) in predictions.iter().zip(golds) {
        let kp = class_slot(&mut index, &mut counts, p);
        let kg = class_slot(&mut index, &mut counts, g);
        counts[kp].1 += 1;
        counts[kg].2 += 1;
        if p == g {
            counts[kg].0 += 1;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut out = Prf::default();
    for &(tp, predicted, support) in &counts {
        let w = support as f64;
        let p = ratio(tp, predicted);
        let r = ratio(tp, support);
        let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        out.precision += w * p;
        out.recall += w * r;
        out.f1 += w * f1;
    }
    let total = golds.len() as f64;
    out.precision /= total;
    out.recall /= total;
    out.f1 /= total;
    Ok(out)
}

fn class_slot<'a, C: Eq + Hash>(
    index: &mut HashMap<&'a C, usize>,
    counts: &mut Vec<(usize, usize, usize)>,
    class: &'a C,
) -> usize {
    let next = index.len();
    let k = *index.entry(class).or_insert(next);
    if k == counts.len() {
        counts.push((0, 0, 0));
    }
    k
}

/// Corpus-level BLEU-4 in `[0, 100]`: clipped n-gram precisions for
/// n = 1..4 with uniform weights, no smoothing, and the brevity penalty
/// `exp(1 - r/c)` when the candidates are shorter than the references.
pub fn bleu<T: Eq + Hash>(candidates: &[Vec<T>], references: &[Vec<T>]) -> Result<f64, MetricsError> {
    same_len("bleu", references.len(), candidates.len())?;
    if references.is_empty() {
        return Err(MetricsError::Empty("bleu"));
    }
    let mut matched = [0usize; 4];
    let mut possible = [0usize; 4];
    let (mut c, mut r) = (0usize, 0usize);
    for (cand, refs) in candidates.iter().zip(references) {
        c += cand.len();
        r += refs.len();
        for n in 1..=4 {
            let ref_counts = ngram_counts(refs, n);
            for (gram, count) in ngram_counts(cand, n) {
                matched[n - 1] += count.min(ref_counts.get(gram).copied().unwrap_or(0));
                possible[n - 1] += count;
            }
        }
    }
    if c == 0 || matched.contains(&0) {
        return Ok(0.0);
    }
    let log_p: f64 = (0..4)
        .map(|k| (matched[k] as f64 / possible[k] as f64).ln())
        .sum::<f64>()
        / 4.0;
    let bp = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    Ok(100.0 * bp * log_p.exp())
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Syllables whose predicted note group lasts exactly as long as the gold
/// group, and the number of syllables compared.
pub fn duration_of_word(predicted: &AlignedLine, gold: &AlignedLine) -> Result<(usize, usize), MetricsError> {
    let pred = predicted.groups()?;
    let gold = gold.groups()?;
    same_len("duration_of_word syllables", gold.len(), pred.len())?;
    let matches = pred
        .iter()
        .zip(&gold)
        .filter(|(p, g)| p.iter().sum::<TotalDuration>() == g.iter().sum::<TotalDuration>())
        .count();
    Ok((matches, gold.len()))
}

#[cfg(test)]
mod tests;

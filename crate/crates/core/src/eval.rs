//! Exact-match precision, recall and F1 over tuple sets.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::SentimentTuple;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub tp: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl std::ops::AddAssign for MatchCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.predicted += rhs.predicted;
        self.gold += rhs.gold;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Counts for one sentence. Both sides are deduplicated by normalized key;
/// a tuple whose filled elements differ from the gold shape is an error.
pub fn match_counts(predicted: &[SentimentTuple], gold: &[SentimentTuple]) -> Result<MatchCounts> {
    if let Some(shape) = gold.first().map(SentimentTuple::shape) {
        for t in predicted.iter().chain(gold) {
            if t.shape() != shape {
                return Err(Error::ShapeMismatch(format!(
                    "tuple {t} does not match the gold shape"
                )));
            }
        }
    }
    let p: BTreeSet<&SentimentTuple> = predicted.iter().collect();
    let g: BTreeSet<&SentimentTuple> = gold.iter().collect();
    Ok(MatchCounts {
        tp: p.intersection(&g).count(),
        predicted: p.len(),
        gold: g.len(),
    })
}

/// Micro-averaged scores. An empty denominator gives 0.
pub fn micro_f1(counts: MatchCounts) -> Prf {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(counts.tp, counts.predicted);
    let recall = ratio(counts.tp, counts.gold);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf {
        precision,
        recall,
        f1,
    }
}

/// Sums counts over a corpus of `(predicted, gold)` pairs.
pub fn corpus_counts<'a>(
    pairs: impl IntoIterator<Item = (&'a [SentimentTuple], &'a [SentimentTuple])>,
) -> Result<MatchCounts> {
    let mut total = MatchCounts::default();
    for (p, g) in pairs {
        total += match_counts(p, g)?;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub runs: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
}

pub fn aggregate_runs(values: &[f64]) -> Option<RunSummary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some(RunSummary {
        runs: values.len(),
        mean,
        std,
    })
}

/// One evaluated run, as appended to a results log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub task: String,
    pub dataset: String,
    pub strategy: String,
    pub views: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    pub counts: MatchCounts,
    pub scores: Prf,
    /// Sentences whose prediction failed and counted as empty.
    #[serde(default)]
    pub errors: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Polarity;

    fn q(a: &str) -> SentimentTuple {
        SentimentTuple::quad(a, "food", "good", Polarity::Pos)
    }

    #[test]
    fn worked_example() {
        let c = match_counts(&[q("a"), q("b"), q("c")], &[q("a"), q("b"), q("d"), q("e")]).unwrap();
        assert_eq!(
            c,
            MatchCounts {
                tp: 2,
                predicted: 3,
                gold: 4
            }
        );
        let s = micro_f1(c);
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.recall - 0.5).abs() < 1e-12);
        assert!((s.f1 - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn empty_denominators() {
        assert_eq!(micro_f1(MatchCounts::default()), Prf::default());
        let s = micro_f1(MatchCounts {
            tp: 0,
            predicted: 0,
            gold: 3,
        });
        assert_eq!(s.f1, 0.0);
    }

    #[test]
    fn normalized_duplicates_count_once() {
        let c = match_counts(&[q("Sushi"), q(" sushi ")], &[q("sushi")]).unwrap();
        assert_eq!(
            c,
            MatchCounts {
                tp: 1,
                predicted: 1,
                gold: 1
            }
        );
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let t = SentimentTuple::aste("a", "b", Polarity::Pos);
        assert!(matches!(
            match_counts(&[t], &[q("a")]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn run_aggregation() {
        let s = aggregate_runs(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.std - 1.0).abs() < 1e-12);
        assert_eq!(aggregate_runs(&[5.0]).unwrap().std, 0.0);
        assert!(aggregate_runs(&[]).is_none());
    }
}

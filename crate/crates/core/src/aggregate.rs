//! Combining the tuple sets predicted under several element orders.
//!
//! [`vote`] keeps a tuple when at least half of the `m` views predict it.
//! [`rank_select`] and [`random_select`] pick a single view instead, and
//! [`single_view_order`] chooses the one order a single-view run uses.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendError, ScoreMode};
use crate::data::DatasetExample;
use crate::error::{Error, Result};
use crate::orders::select_orders;
use crate::schema::{ElementKind, ElementOrder, SentimentTuple, TaskSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewPrediction {
    pub order: ElementOrder,
    pub tuples: BTreeSet<SentimentTuple>,
    pub sequence_score: f64,
    #[serde(default)]
    pub truncated: bool,
}

impl ViewPrediction {
    pub fn new(
        order: ElementOrder,
        tuples: impl IntoIterator<Item = SentimentTuple>,
        sequence_score: f64,
    ) -> Self {
        ViewPrediction {
            order,
            tuples: tuples.into_iter().collect(),
            sequence_score,
            truncated: false,
        }
    }
}

/// Majority vote: tuples present in at least `m / 2` of the `m` views.
///
/// The threshold is non-strict, so with two views a tuple from either one
/// survives.
pub fn vote(views: &[ViewPrediction]) -> BTreeSet<SentimentTuple> {
    let m = views.len();
    let mut counts: BTreeMap<&SentimentTuple, usize> = BTreeMap::new();
    for view in views {
        for t in &view.tuples {
            *counts.entry(t).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .filter(|(_, c)| 2 * c >= m)
        .map(|(t, _)| t.clone())
        .collect()
}

/// Tuples of the view with the highest mean log-probability.
///
/// Truncated views and non-finite scores are not eligible; equal scores go
/// to the lexicographically smallest order.
pub fn rank_select(views: &[ViewPrediction]) -> BTreeSet<SentimentTuple> {
    views
        .iter()
        .filter(|v| !v.truncated && v.sequence_score.is_finite())
        .min_by(|a, b| {
            b.sequence_score
                .total_cmp(&a.sequence_score)
                .then_with(|| a.order.cmp(&b.order))
        })
        .map(|v| v.tuples.clone())
        .unwrap_or_default()
}

/// Index of the view [`random_select`] picks for `seed`.
pub fn random_index(len: usize, seed: u64) -> usize {
    ChaCha8Rng::seed_from_u64(seed).gen_range(0..len)
}

/// Tuples of one view chosen uniformly at random.
pub fn random_select(views: &[ViewPrediction], seed: u64) -> BTreeSet<SentimentTuple> {
    if views.is_empty() {
        return BTreeSet::new();
    }
    views[random_index(views.len(), seed)].tuples.clone()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SingleViewStrategy {
    Random,
    Heuristic,
    Rank,
}

/// `[A][O][C][S]`, restricted to the task's elements.
pub fn heuristic_order(task: &TaskSpec) -> ElementOrder {
    use ElementKind::*;
    let kinds = [Aspect, Opinion, Category, Polarity]
        .into_iter()
        .filter(|k| task.task.has(*k))
        .collect();
    ElementOrder::new(kinds).expect("every task has aspect and polarity")
}

/// Picks the order used by a single-view run.
pub fn single_view_order(
    strategy: SingleViewStrategy,
    task: &TaskSpec,
    dataset: &[DatasetExample],
    scorer: Option<&dyn Backend>,
    seed: u64,
) -> Result<ElementOrder> {
    match strategy {
        SingleViewStrategy::Heuristic => Ok(heuristic_order(task)),
        SingleViewStrategy::Random => {
            let mut kinds = task.elements().to_vec();
            kinds.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            ElementOrder::new(kinds)
        }
        SingleViewStrategy::Rank => {
            let scorer = scorer.ok_or(Error::Backend(BackendError::Capability("score")))?;
            let mut top = select_orders(task.task, dataset, scorer, 1, ScoreMode::Mean)?;
            Ok(top.remove(0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Polarity, Task};

    fn t(a: &str) -> SentimentTuple {
        SentimentTuple::aste(a, "o", Polarity::Pos)
    }

    fn view(order: &str, tuples: &[&str], score: f64) -> ViewPrediction {
        ViewPrediction::new(order.parse().unwrap(), tuples.iter().map(|a| t(a)), score)
    }

    #[test]
    fn vote_threshold_examples() {
        let views = vec![
            view("[A][O][S]", &["t1", "t2"], -1.0),
            view("[A][S][O]", &["t1", "t2"], -1.0),
            view("[O][A][S]", &["t1"], -1.0),
            view("[O][S][A]", &[], -1.0),
            view("[S][A][O]", &[], -1.0),
        ];
        assert_eq!(vote(&views), [t("t1")].into_iter().collect());

        assert_eq!(
            vote(&[view("[A][O][S]", &["t"], -1.0)]),
            [t("t")].into_iter().collect()
        );

        let two = vec![
            view("[A][O][S]", &["t"], -1.0),
            view("[A][S][O]", &[], -1.0),
        ];
        assert_eq!(vote(&two), [t("t")].into_iter().collect());
    }

    #[test]
    fn within_view_duplicates_count_once() {
        let mut v = view("[A][O][S]", &["x"], -1.0);
        v.tuples
            .insert(SentimentTuple::aste(" X ", "O", Polarity::Pos));
        assert_eq!(v.tuples.len(), 1);
        let views = vec![
            v,
            view("[A][S][O]", &[], -1.0),
            view("[O][A][S]", &[], -1.0),
        ];
        assert!(vote(&views).is_empty());
    }

    #[test]
    fn rank_picks_highest_score() {
        let views = vec![
            view("[A][O][S]", &["a"], -0.5),
            view("[A][S][O]", &["b"], -2.0),
        ];
        assert_eq!(rank_select(&views), [t("a")].into_iter().collect());
        assert_eq!(rank_select(&views[1..]), [t("b")].into_iter().collect());
    }

    #[test]
    fn rank_ties_go_to_smallest_order() {
        let views = vec![
            view("[O][A][S]", &["late"], -1.0),
            view("[A][S][O]", &["early"], -1.0),
        ];
        assert_eq!(rank_select(&views), [t("early")].into_iter().collect());
    }

    #[test]
    fn rank_skips_truncated_views() {
        let mut best = view("[A][O][S]", &["a"], -0.1);
        best.truncated = true;
        let views = vec![best, view("[A][S][O]", &["b"], -3.0)];
        assert_eq!(rank_select(&views), [t("b")].into_iter().collect());
    }

    #[test]
    fn random_select_is_seeded() {
        let views: Vec<_> = ["[A][O][S]", "[A][S][O]", "[O][A][S]"]
            .iter()
            .enumerate()
            .map(|(i, o)| view(o, &[&format!("v{i}")], -1.0))
            .collect();
        assert_eq!(random_select(&views, 9), random_select(&views, 9));
        assert_eq!(random_select(&views[..1], 4), views[0].tuples);
    }

    #[test]
    fn heuristic_orders() {
        let asqp = TaskSpec::new(Task::Asqp, "Rest15", vec!["food".into()]).unwrap();
        assert_eq!(heuristic_order(&asqp).marker_string(), "[A][O][C][S]");
        let aste = TaskSpec::new(Task::Aste, "Rest15", vec![]).unwrap();
        assert_eq!(heuristic_order(&aste).marker_string(), "[A][O][S]");
        let tasd = TaskSpec::new(Task::Tasd, "Rest15", vec!["food".into()]).unwrap();
        assert_eq!(heuristic_order(&tasd).marker_string(), "[A][C][S]");
    }

    #[test]
    fn rank_strategy_needs_scorer() {
        let aste = TaskSpec::new(Task::Aste, "Rest15", vec![]).unwrap();
        let err = single_view_order(SingleViewStrategy::Rank, &aste, &[], None, 0).unwrap_err();
        assert!(matches!(err, Error::Backend(BackendError::Capability(_))));
    }

    #[test]
    fn random_strategy_is_a_seeded_task_order() {
        let asqp = TaskSpec::new(Task::Asqp, "Rest15", vec!["food".into()]).unwrap();
        let a = single_view_order(SingleViewStrategy::Random, &asqp, &[], None, 5).unwrap();
        let b = single_view_order(SingleViewStrategy::Random, &asqp, &[], None, 5).unwrap();
        assert_eq!(a, b);
        a.check_task(Task::Asqp).unwrap();
    }
}

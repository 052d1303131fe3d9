//! Element-order enumeration and score-based selection.
//!
//! Every permutation of the task's markers is a candidate view. Each one is
//! scored by the mean, over the training set, of the backend's conditional
//! likelihood of the ordered target (markers blanked out) given the
//! sentence; the top `m` become the views used for training and inference.

use std::cmp::Ordering;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendError, ScoreMode};
use crate::data::DatasetExample;
use crate::error::{Error, Result};
use crate::schema::{serialize_target, ElementKind, ElementOrder, Task, SSEP};

/// Views used when no count is given.
pub const DEFAULT_VIEWS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderScore {
    pub order: ElementOrder,
    pub score: f64,
    pub samples: usize,
}

/// All permutations of the task's markers in lexicographic marker order.
pub fn enumerate_orders(task: Task) -> Vec<ElementOrder> {
    let mut current: Vec<ElementKind> = task.elements().to_vec();
    current.sort();
    let mut out = Vec::new();
    loop {
        // elements() is a valid, duplicate-free set
        out.push(ElementOrder::new(current.clone()).expect("task elements form an order"));
        // next lexicographic permutation
        let Some(i) = (0..current.len().saturating_sub(1))
            .rev()
            .find(|&i| current[i] < current[i + 1])
        else {
            break;
        };
        let j = (i + 1..current.len())
            .rev()
            .find(|&j| current[j] > current[i])
            .expect("a larger successor exists");
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

/// The ordered target with every element marker replaced by a space and
/// whitespace collapsed. Tuple separators are kept.
pub fn demarked_target(example: &DatasetExample, order: &ElementOrder) -> Result<String> {
    let target = serialize_target(&example.gold, order)?;
    let mut blanked = target;
    for kind in order.kinds() {
        blanked = blanked.replace(kind.marker(), " ");
    }
    Ok(blanked.split_whitespace().collect::<Vec<_>>().join(" "))
}

fn check_dataset(dataset: &[DatasetExample]) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::Invalid(
            "order scoring needs a non-empty dataset".into(),
        ));
    }
    if let Some(i) = dataset.iter().position(|e| e.gold.is_empty()) {
        return Err(Error::Invalid(format!(
            "example {i} has no gold tuples to score"
        )));
    }
    Ok(())
}

/// Mean conditional score of one order over the dataset.
pub fn score_order(
    dataset: &[DatasetExample],
    order: &ElementOrder,
    scorer: &dyn Backend,
    mode: ScoreMode,
) -> Result<OrderScore> {
    check_dataset(dataset)?;
    if !scorer.capabilities().supports_score {
        return Err(BackendError::Capability("score").into());
    }
    let mut total = 0.0;
    for (index, example) in dataset.iter().enumerate() {
        let target = demarked_target(example, order)?;
        let s = scorer
            .score(&example.sentence, &target)
            .map_err(|source| Error::Scoring { index, source })?;
        total += s.value(mode);
    }
    let score = total / dataset.len() as f64;
    if !score.is_finite() {
        return Err(Error::Invalid(format!("order {order} scored {score}")));
    }
    Ok(OrderScore {
        order: order.clone(),
        score,
        samples: dataset.len(),
    })
}

/// Best first; equal scores fall back to the marker string.
fn by_rank(a: &OrderScore, b: &OrderScore) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.order.cmp(&b.order))
}

/// Scores every permutation of `task`, sorted best first.
pub fn rank_orders(
    task: Task,
    dataset: &[DatasetExample],
    scorer: &dyn Backend,
    mode: ScoreMode,
) -> Result<Vec<OrderScore>> {
    check_dataset(dataset)?;
    let mut scores = enumerate_orders(task)
        .par_iter()
        .map(|order| score_order(dataset, order, scorer, mode))
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(by_rank);
    Ok(scores)
}

/// `order` restricted to the elements of `task`, keeping their relative
/// positions; `None` if that drops aspect or polarity.
pub fn project_order(order: &ElementOrder, task: Task) -> Option<ElementOrder> {
    let kinds = order
        .kinds()
        .iter()
        .copied()
        .filter(|k| task.has(*k))
        .collect::<Vec<_>>();
    ElementOrder::for_task(kinds, task).ok()
}

/// Projects every order onto `task`, dropping duplicates and keeping the
/// first occurrence.
pub fn project_orders(orders: &[ElementOrder], task: Task) -> Vec<ElementOrder> {
    let mut out: Vec<ElementOrder> = Vec::new();
    for o in orders.iter().filter_map(|o| project_order(o, task)) {
        if !out.contains(&o) {
            out.push(o);
        }
    }
    out
}

pub fn check_view_count(task: Task, m: usize) -> Result<()> {
    let max = enumerate_orders(task).len();
    if m == 0 || m > max {
        return Err(Error::ViewCount { m, max });
    }
    Ok(())
}

/// The `m` best-scoring orders, best first.
pub fn select_orders(
    task: Task,
    dataset: &[DatasetExample],
    scorer: &dyn Backend,
    m: usize,
    mode: ScoreMode,
) -> Result<Vec<ElementOrder>> {
    check_view_count(task, m)?;
    Ok(rank_orders(task, dataset, scorer, mode)?
        .into_iter()
        .take(m)
        .map(|s| s.order)
        .collect())
}

/// One marker string per line.
pub fn write_orders(path: &Path, orders: &[ElementOrder]) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for o in orders {
        writeln!(file, "{o}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn parse_orders(text: &str, path: &Path) -> Result<Vec<ElementOrder>> {
    let mut orders = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.contains(SSEP) {
            return Err(Error::Format {
                path: path.to_path_buf(),
                line: i + 1,
                message: "separator is not an element marker".into(),
            });
        }
        orders.push(line.parse().map_err(|e: Error| Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(orders)
}

pub fn read_orders(path: &Path) -> Result<Vec<ElementOrder>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_orders(&text, path)
}

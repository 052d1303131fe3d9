//! The predictions file: one JSON record per input sentence.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{bail, Context, Result};
use mvp_core::aggregate::{random_select, rank_select, vote, ViewPrediction};
use mvp_core::backend::stable_hash;
use mvp_core::schema::{ElementOrder, SentimentTuple};
use serde::{Deserialize, Serialize};

use crate::settings::Strategy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewRecord {
    pub order: ElementOrder,
    pub text: String,
    pub tuples: Vec<SentimentTuple>,
    pub sequence_score: f64,
    pub truncated: bool,
    /// Segments the parser had to skip.
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: usize,
    pub task: String,
    pub dataset: String,
    pub sentence: String,
    pub strategy: String,
    pub seed: u64,
    pub views: Vec<ViewRecord>,
    #[serde(rename = "final")]
    pub final_tuples: Vec<SentimentTuple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PredictionRecord {
    pub fn view_predictions(&self) -> Vec<ViewPrediction> {
        self.views
            .iter()
            .map(|v| ViewPrediction {
                order: v.order.clone(),
                tuples: v.tuples.iter().cloned().collect(),
                sequence_score: v.sequence_score,
                truncated: v.truncated,
            })
            .collect()
    }
}

/// Per-sentence seed for the `random` strategy.
pub fn sentence_seed(seed: u64, id: usize) -> u64 {
    stable_hash(seed, &[&(id as u64).to_le_bytes()])
}

/// Final tuple set of one sentence under `strategy`.
pub fn aggregate(
    strategy: Strategy,
    views: &[ViewPrediction],
    seed: u64,
    id: usize,
) -> BTreeSet<SentimentTuple> {
    match strategy {
        Strategy::Vote => vote(views),
        Strategy::Rank => rank_select(views),
        Strategy::Random => random_select(views, sentence_seed(seed, id)),
        Strategy::SvpRandom | Strategy::SvpHeuristic | Strategy::SvpRank => {
            views.first().map(|v| v.tuples.clone()).unwrap_or_default()
        }
    }
}

pub fn read(path: &Path) -> Result<Vec<PredictionRecord>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => out.push(r),
            Err(e) => bail!("{}:{}: {e}", path.display(), i + 1),
        }
    }
    Ok(out)
}

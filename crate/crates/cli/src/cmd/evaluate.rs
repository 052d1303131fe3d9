use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use mvp_core::data::Split;
use mvp_core::eval::{aggregate_runs, match_counts, micro_f1, MatchCounts, RunRecord};
use mvp_core::schema::normalize_text;

use super::{load_all, split_of, Outcome};
use crate::predictions::{self, aggregate};
use crate::settings::{Settings, Strategy};

fn strategy_named(name: &str) -> Option<Strategy> {
    [
        Strategy::Vote,
        Strategy::Rank,
        Strategy::Random,
        Strategy::SvpRandom,
        Strategy::SvpHeuristic,
        Strategy::SvpRank,
    ]
    .into_iter()
    .find(|s| s.name() == name)
}

/// Scores a predictions file against the gold split. `rescore` re-runs
/// aggregation over the stored views.
pub fn evaluate(
    settings: &Settings,
    predictions: &Path,
    rescore: Option<Strategy>,
) -> Result<Outcome> {
    let records = predictions::read(predictions)?;
    let dirs = load_all(settings)?;
    let split = settings.split.unwrap_or(Split::Test);
    let mut gold = Vec::new();
    for dir in &dirs {
        gold.extend(split_of(dir, split)?.iter());
    }

    let mut offending = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let aligned = r.id == i
            && gold
                .get(i)
                .is_some_and(|g| normalize_text(&g.sentence) == normalize_text(&r.sentence));
        if !aligned {
            offending.push(r.id);
        }
    }
    if records.len() != gold.len() || !offending.is_empty() {
        let shown: Vec<String> = offending.iter().take(20).map(|i| i.to_string()).collect();
        bail!(
            "{} holds {} records for {} gold sentences; misaligned ids: [{}]",
            predictions.display(),
            records.len(),
            gold.len(),
            shown.join(", ")
        );
    }

    let stored = records
        .first()
        .map(|r| r.strategy.clone())
        .unwrap_or_default();
    let strategy = match rescore {
        Some(s) if s.name() != stored => {
            if s.is_single_view() || strategy_named(&stored).is_some_and(Strategy::is_single_view) {
                bail!("cannot re-aggregate {stored} predictions as {}", s.name());
            }
            Some(s)
        }
        _ => None,
    };

    let mut counts = MatchCounts::default();
    let mut errors = 0;
    for (r, g) in records.iter().zip(&gold) {
        if r.error.is_some() {
            errors += 1;
        }
        let predicted: Vec<_> = match strategy {
            Some(s) => aggregate(s, &r.view_predictions(), r.seed, r.id)
                .into_iter()
                .collect(),
            None => r.final_tuples.clone(),
        };
        counts +=
            match_counts(&predicted, &g.gold).with_context(|| format!("sentence {}", r.id))?;
    }
    let scores = micro_f1(counts);
    let first = records.first();
    let record = RunRecord {
        task: first.map(|r| r.task.clone()).unwrap_or_default(),
        dataset: dirs
            .iter()
            .map(|d| d.spec.dataset.clone())
            .collect::<Vec<_>>()
            .join("+"),
        strategy: strategy.map_or(stored, |s| s.name().to_string()),
        views: first.map_or(0, |r| r.views.len()),
        seed: first.map_or(settings.seed, |r| r.seed),
        fraction: (settings.fraction < 1.0).then_some(settings.fraction),
        counts,
        scores,
        errors,
    };
    println!(
        "{} {} {} m={} seed={}  P={:.2} R={:.2} F1={:.2}  (tp={} pred={} gold={}, {} failed)",
        record.task,
        record.dataset,
        record.strategy,
        record.views,
        record.seed,
        scores.precision * 100.0,
        scores.recall * 100.0,
        scores.f1 * 100.0,
        counts.tp,
        counts.predicted,
        counts.gold,
        errors
    );
    if let Some(out) = &settings.out {
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(out)
            .with_context(|| format!("opening {}", out.display()))?;
        serde_json::to_writer(&mut file, &record)?;
        file.write_all(b"\n")?;
    }
    Ok(Outcome::Ok)
}

/// Mean and sample standard deviation of F1 per configuration.
pub fn report_runs(path: &Path) -> Result<Outcome> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut groups: BTreeMap<(String, String, String, usize), Vec<f64>> = BTreeMap::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: RunRecord =
            serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        groups
            .entry((r.task, r.dataset, r.strategy, r.views))
            .or_default()
            .push(r.scores.f1 * 100.0);
    }
    println!("task\tdataset\tstrategy\tm\truns\tF1 mean\tF1 std");
    for ((task, dataset, strategy, m), f1) in groups {
        // groups are never empty
        let s = aggregate_runs(&f1).expect("non-empty group");
        println!(
            "{task}\t{dataset}\t{strategy}\t{m}\t{}\t{:.2}\t{:.2}",
            s.runs, s.mean, s.std
        );
    }
    Ok(Outcome::Ok)
}

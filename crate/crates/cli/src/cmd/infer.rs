use std::io::Write;

use anyhow::{Context, Result};
use mvp_core::aggregate::{heuristic_order, single_view_order, SingleViewStrategy};
use mvp_core::backend::Backend;
use mvp_core::data::{DatasetDir, DatasetExample, Split};
use mvp_core::decoding::{generate_with_tables, vocab_for, ConstraintTables, PieceVocab};
use mvp_core::orders::enumerate_orders;
use mvp_core::schema::{build_input, parse_target, serialize_target, ElementOrder, TaskSpec};
use rayon::prelude::*;

use super::{create, finish, load_all, orders_for, split_of, Outcome};
use crate::backends::{self, BackendSpec, Script};
use crate::predictions::{aggregate, PredictionRecord, ViewRecord};
use crate::settings::{Settings, Strategy};

struct Item<'a> {
    id: usize,
    spec: &'a TaskSpec,
    example: &'a DatasetExample,
    views: &'a [ElementOrder],
}

fn prefix(settings: &Settings, spec: &TaskSpec) -> Option<String> {
    settings.multitask.then(|| spec.prefix())
}

/// Every gold target under every order, for `mock:gold`.
fn gold_scripts(settings: &Settings, dirs: &[DatasetDir], split: Split) -> Vec<Script> {
    let mut out = Vec::new();
    for dir in dirs {
        let Some(examples) = dir.split(split) else {
            continue;
        };
        let p = prefix(settings, &dir.spec);
        for order in enumerate_orders(dir.spec.task) {
            for e in examples {
                // gold tuples always fit their own task's orders
                if let Ok(target) = serialize_target(&e.gold, &order) {
                    out.push(Script {
                        input: build_input(&e.sentence, &order, p.as_deref()),
                        target,
                    });
                }
            }
        }
    }
    out
}

fn views_for(
    settings: &Settings,
    dir: &DatasetDir,
    backend: &dyn Backend,
) -> Result<Vec<ElementOrder>> {
    let spec = &dir.spec;
    Ok(match settings.strategy {
        Strategy::Vote | Strategy::Rank | Strategy::Random => orders_for(settings, spec.task)?,
        Strategy::SvpHeuristic => vec![heuristic_order(spec)],
        Strategy::SvpRandom => vec![single_view_order(
            SingleViewStrategy::Random,
            spec,
            &[],
            None,
            settings.seed,
        )?],
        Strategy::SvpRank => {
            let train = split_of(dir, Split::Train)?;
            vec![single_view_order(
                SingleViewStrategy::Rank,
                spec,
                train,
                Some(backend),
                settings.seed,
            )?]
        }
    })
}

fn predict(
    item: &Item<'_>,
    settings: &Settings,
    backend: &dyn Backend,
    vocab: &PieceVocab,
) -> PredictionRecord {
    let mut record = PredictionRecord {
        id: item.id,
        task: item.spec.task.name().to_string(),
        dataset: item.spec.dataset.clone(),
        sentence: item.example.sentence.clone(),
        strategy: settings.strategy.name().to_string(),
        seed: settings.seed,
        views: Vec::new(),
        final_tuples: Vec::new(),
        error: None,
    };
    let run = || -> mvp_core::Result<Vec<ViewRecord>> {
        let tables = ConstraintTables::build(&item.example.sentence, item.spec, vocab)?;
        let p = prefix(settings, item.spec);
        item.views
            .iter()
            .map(|order| {
                let input = build_input(&item.example.sentence, order, p.as_deref());
                let g = generate_with_tables(
                    backend,
                    vocab,
                    &tables,
                    &input,
                    order,
                    settings.max_tokens,
                )?;
                let (tuples, diag) = parse_target(&g.text, item.spec);
                Ok(ViewRecord {
                    order: order.clone(),
                    text: g.text,
                    tuples,
                    sequence_score: g.sequence_score,
                    truncated: g.truncated,
                    skipped: diag.skipped_count(),
                })
            })
            .collect()
    };
    match run() {
        Ok(views) => {
            record.views = views;
            record.final_tuples = aggregate(
                settings.strategy,
                &record.view_predictions(),
                settings.seed,
                item.id,
            )
            .into_iter()
            .collect();
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

pub fn infer(settings: &Settings) -> Result<Outcome> {
    let dirs = load_all(settings)?;
    let split = settings.split.unwrap_or(Split::Test);
    let spec = BackendSpec::parse(
        settings
            .backend
            .as_deref()
            .context("--backend is required")?,
    )?;

    let corpus_vocab = || {
        let specs: Vec<&TaskSpec> = dirs.iter().map(|d| &d.spec).collect();
        let sentences = dirs.iter().flat_map(|d| {
            d.splits
                .iter()
                .flat_map(|(_, e)| e.iter().map(|x| x.sentence.as_str()))
        });
        vocab_for(sentences, &specs)
    };
    let (loaded, vocab) = if let BackendSpec::Remote(_) = spec {
        let loaded = backends::load(&spec, settings, None, &[])?;
        let vocab = backends::tokenizer(settings, loaded.artifact.as_deref(), corpus_vocab)?;
        (loaded, vocab)
    } else {
        let vocab = backends::tokenizer(settings, None, corpus_vocab)?;
        let scripts = match spec {
            BackendSpec::Gold { .. } => gold_scripts(settings, &dirs, split),
            _ => Vec::new(),
        };
        (
            backends::load(&spec, settings, Some(&vocab), &scripts)?,
            vocab,
        )
    };
    let backend = &*loaded.backend;

    let mut views = Vec::new();
    for dir in &dirs {
        views.push(views_for(settings, dir, backend)?);
    }
    let mut items = Vec::new();
    for (dir, views) in dirs.iter().zip(&views) {
        for example in split_of(dir, split)? {
            items.push(Item {
                id: items.len(),
                spec: &dir.spec,
                example,
                views,
            });
        }
    }

    let records: Vec<PredictionRecord> = settings.thread_pool()?.install(|| {
        items
            .par_iter()
            .map(|item| predict(item, settings, backend, &vocab))
            .collect()
    });

    let out = settings.out_or("predictions.jsonl");
    let mut w = create(&out)?;
    for r in &records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    finish(w, &out)?;

    let failed: Vec<&PredictionRecord> = records.iter().filter(|r| r.error.is_some()).collect();
    for r in failed.iter().take(10) {
        eprintln!(
            "sentence {}: {}",
            r.id,
            r.error.as_deref().unwrap_or_default()
        );
    }
    eprintln!(
        "predicted {} sentences with {} view(s) each; {} failed; wrote {}",
        records.len(),
        views.first().map_or(0, Vec::len),
        failed.len(),
        out.display()
    );
    Ok(if failed.is_empty() {
        Outcome::Ok
    } else {
        Outcome::Partial
    })
}

use anyhow::{Context, Result};
use mvp_core::data::{subsample, Split};
use mvp_core::orders::{check_view_count, rank_orders, write_orders};

use super::{load_all, split_of, Outcome};
use crate::backends::{self, BackendSpec};
use crate::settings::Settings;

pub fn select_orders(settings: &Settings) -> Result<Outcome> {
    let task = settings.single_task()?;
    check_view_count(task, settings.m)?;
    let mut train = Vec::new();
    for dir in load_all(settings)? {
        train.extend_from_slice(split_of(&dir, Split::Train)?);
    }
    if settings.fraction < 1.0 {
        train = subsample(&train, settings.fraction, settings.seed)?;
    }
    let spec = BackendSpec::parse(
        settings
            .backend
            .as_deref()
            .context("--backend is required")?,
    )?;
    let loaded = backends::load(&spec, settings, None, &[])?;
    let ranked = settings
        .thread_pool()?
        .install(|| rank_orders(task, &train, &*loaded.backend, settings.score_mode))?;

    println!("rank\torder\tscore");
    for (i, s) in ranked.iter().enumerate() {
        let mark = if i < settings.m { "*" } else { "" };
        println!("{}\t{}\t{:.6}{mark}", i + 1, s.order, s.score);
    }
    let out = settings.out_or("orders.txt");
    let scored = ranked.len();
    let top: Vec<_> = ranked
        .into_iter()
        .take(settings.m)
        .map(|s| s.order)
        .collect();
    write_orders(&out, &top)?;
    eprintln!(
        "scored {} orders on {} examples; wrote top {} to {}",
        scored,
        train.len(),
        settings.m,
        out.display()
    );
    Ok(Outcome::Ok)
}

mod evaluate;
mod infer;
mod select;
mod stats;
mod train;

pub use evaluate::{evaluate, report_runs};
pub use infer::infer;
pub use select::select_orders;
pub use stats::stats;
pub use train::build_train;

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use mvp_core::data::{DatasetDir, DatasetExample, Split};
use mvp_core::orders::{project_orders, read_orders};
use mvp_core::schema::{ElementOrder, Task};

use crate::settings::Settings;

/// Process exit status of a finished command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// Completed, but some items failed.
    Partial,
    /// Completed, and a check did not hold.
    Mismatch,
}

pub(crate) fn load_all(settings: &Settings) -> Result<Vec<DatasetDir>> {
    settings
        .require_datasets()?
        .iter()
        .map(|d| d.open())
        .collect()
}

pub(crate) fn split_of(dir: &DatasetDir, split: Split) -> Result<&[DatasetExample]> {
    dir.split(split)
        .with_context(|| format!("{} has no {split}.txt", dir.root.display()))
}

/// The first `m` orders of the orders file, projected onto `task`.
pub(crate) fn orders_for(settings: &Settings, task: Task) -> Result<Vec<ElementOrder>> {
    let path = settings.require_orders_file()?;
    let all = read_orders(path)?;
    let usable = if settings.multitask {
        project_orders(&all, task)
    } else {
        for o in &all {
            o.check_task(task)?;
        }
        all
    };
    if usable.len() < settings.m {
        bail!(
            "{} provides {} {task} orders, fewer than --m {}",
            path.display(),
            usable.len(),
            settings.m
        );
    }
    Ok(usable.into_iter().take(settings.m).collect())
}

pub(crate) fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    let file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(std::io::BufWriter::new(file))
}

pub(crate) fn finish(mut w: std::io::BufWriter<std::fs::File>, path: &Path) -> Result<()> {
    w.flush()
        .with_context(|| format!("writing {}", path.display()))
}

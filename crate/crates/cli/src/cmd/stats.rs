use std::path::Path;

use anyhow::{Context, Result};
use mvp_core::data::{check_expectations, format_stats_table, parse_expectations, scan_stats};

use super::Outcome;
use crate::settings::Settings;

pub fn stats(settings: &Settings, expect: Option<&Path>) -> Result<Outcome> {
    let mut all = Vec::new();
    for d in settings.require_datasets()? {
        all.push(scan_stats(&d.dir, d.task, &d.name())?);
    }
    print!("{}", format_stats_table(&all));
    let Some(path) = expect else {
        return Ok(Outcome::Ok);
    };
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report = check_expectations(&all, &parse_expectations(&text, path)?);
    for p in &report.problems {
        println!("mismatch: {p}");
    }
    println!(
        "{}: {} expectations checked, {} failed, {} skipped (dataset not given)",
        path.display(),
        report.checked,
        report.problems.len(),
        report.skipped
    );
    Ok(if report.holds() {
        Outcome::Ok
    } else {
        Outcome::Mismatch
    })
}

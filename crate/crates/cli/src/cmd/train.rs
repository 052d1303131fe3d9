use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use mvp_core::data::{
    build_multitask, build_training_pairs, example_pairs, subsample, Split, TrainingPair,
};

use super::{create, finish, load_all, orders_for, split_of, Outcome};
use crate::settings::Settings;

fn clean(field: &str) -> String {
    field.replace(['\t', '\n', '\r'], " ")
}

fn write_pairs(path: &std::path::Path, pairs: &[TrainingPair]) -> Result<()> {
    let mut w = create(path)?;
    for p in pairs {
        writeln!(w, "{}\t{}", clean(&p.input), clean(&p.target))?;
    }
    finish(w, path)
}

fn dev_path(out: &std::path::Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "pairs".into());
    out.with_file_name(format!("{stem}.dev.tsv"))
}

pub fn build_train(settings: &Settings) -> Result<Outcome> {
    let dirs = load_all(settings)?;
    let out = settings.out_or("pairs.tsv");
    let mut train_sets = Vec::new();
    for dir in &dirs {
        let train = subsample(
            split_of(dir, Split::Train)?,
            settings.fraction,
            settings.seed,
        )?;
        train_sets.push((dir.spec.clone(), train));
    }

    if !settings.multitask {
        let mut pairs = Vec::new();
        for (spec, train) in &train_sets {
            let orders = orders_for(settings, spec.task)?;
            pairs.extend(build_training_pairs(train, &orders, None)?);
        }
        write_pairs(&out, &pairs)?;
        eprintln!("wrote {} pairs to {}", pairs.len(), out.display());
        return Ok(Outcome::Ok);
    }

    let mut test_sets = Vec::new();
    for dir in &dirs {
        if let Some(test) = dir.split(Split::Test) {
            test_sets.push((dir.spec.clone(), test.to_vec()));
        }
    }
    let corpus = build_multitask(&train_sets, &test_sets, settings.seed);
    let pairs_of = |examples: &[mvp_core::data::PrefixedExample]| -> Result<Vec<TrainingPair>> {
        let mut pairs = Vec::new();
        for p in examples {
            let orders = orders_for(settings, p.example.task.task)?;
            pairs.extend(example_pairs(&p.example, &orders, Some(&p.prefix))?);
        }
        Ok(pairs)
    };
    let train = pairs_of(&corpus.train)?;
    let dev = pairs_of(&corpus.dev)?;
    let dev_out = dev_path(&out);
    write_pairs(&out, &train)?;
    write_pairs(&dev_out, &dev)?;
    eprintln!(
        "wrote {} train pairs to {} and {} dev pairs to {}; dropped {} examples overlapping a test set",
        train.len(),
        out.display(),
        dev.len(),
        dev_out.display(),
        corpus.dropped
    );
    Ok(Outcome::Ok)
}

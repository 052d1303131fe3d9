//! Benchmark datasets and training-pair construction.
//!
//! Files hold one example per line: `sentence####[[...], [...]]`, where each
//! inner list quotes the tuple's elements. Element positions depend on the
//! task:
//!
//! | task        | positions                              |
//! |-------------|----------------------------------------|
//! | ASQP / ACOS | aspect, category, polarity, opinion    |
//! | ASTE        | aspect, opinion, polarity              |
//! | TASD        | aspect, category, polarity             |
//!
//! Polarity words are `positive` / `neutral` / `negative`.

use std::collections::{BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{
    build_input, normalize_text, serialize_target, ElementOrder, Polarity, SentimentTuple, Task,
    TaskSpec,
};

pub const SEPARATOR: &str = "####";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    /// From a file stem such as `train` or `rest15_dev`; defaults to train.
    pub fn from_path(path: &Path) -> Split {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        if stem.ends_with("test") {
            Split::Test
        } else if stem.ends_with("dev") || stem.ends_with("valid") {
            Split::Dev
        } else {
            Split::Train
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetExample {
    pub sentence: String,
    pub gold: Vec<SentimentTuple>,
    pub task: TaskSpec,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub input: String,
    pub target: String,
    pub order: ElementOrder,
}

/// A sentence and its gold tuples, before binding to a [`TaskSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub sentence: String,
    pub gold: Vec<SentimentTuple>,
}

struct LiteralParser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
}

impl<'a> LiteralParser<'a> {
    fn new(text: &'a str) -> Self {
        LiteralParser {
            chars: text.char_indices().peekable(),
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.next_if(|(_, c)| c.is_whitespace()).is_some() {}
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|(_, c)| *c)
    }

    fn string(&mut self) -> std::result::Result<String, String> {
        self.skip_ws();
        let quote = match self.chars.next() {
            Some((_, q @ ('\'' | '"'))) => q,
            Some((i, c)) => {
                return Err(format!(
                    "expected a quoted string at offset {i}, found {c:?}"
                ))
            }
            None => return Err("expected a quoted string, found end of line".into()),
        };
        let mut out = String::new();
        loop {
            match self.chars.next() {
                Some((_, c)) if c == quote => return Ok(out),
                Some((_, '\\')) => match self.chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, c)) => out.push(c),
                    None => return Err("dangling escape".into()),
                },
                Some((_, c)) => out.push(c),
                None => return Err("unterminated string".into()),
            }
        }
    }

    /// `[` or `(` delimited, comma separated, optional trailing comma.
    fn sequence<T>(
        &mut self,
        mut item: impl FnMut(&mut Self) -> std::result::Result<T, String>,
    ) -> std::result::Result<Vec<T>, String> {
        self.skip_ws();
        let close = match self.chars.next() {
            Some((_, '[')) => ']',
            Some((_, '(')) => ')',
            Some((i, c)) => return Err(format!("expected '[' at offset {i}, found {c:?}")),
            None => return Err("expected '[', found end of line".into()),
        };
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(close) {
                self.chars.next();
                return Ok(out);
            }
            out.push(item(self)?);
            self.skip_ws();
            match self.chars.next() {
                Some((_, ',')) => {}
                Some((_, c)) if c == close => return Ok(out),
                Some((i, c)) => {
                    return Err(format!(
                        "expected ',' or {close:?} at offset {i}, found {c:?}"
                    ))
                }
                None => return Err(format!("expected {close:?}, found end of line")),
            }
        }
    }

    fn finish(&mut self) -> std::result::Result<(), String> {
        self.skip_ws();
        match self.chars.next() {
            None => Ok(()),
            Some((i, c)) => Err(format!("trailing {c:?} at offset {i}")),
        }
    }
}

/// Parses the bracketed tuple list of one line.
pub fn parse_tuple_literal(
    literal: &str,
    task: Task,
) -> std::result::Result<Vec<SentimentTuple>, String> {
    let mut p = LiteralParser::new(literal);
    let rows = p.sequence(|p| p.sequence(|p| p.string()))?;
    p.finish()?;
    let arity = task.elements().len();
    rows.into_iter()
        .map(|row| {
            if row.len() != arity {
                return Err(format!(
                    "{task} tuples have {arity} elements, found {}",
                    row.len()
                ));
            }
            let pol = |s: &str| Polarity::from_any(s).map_err(|e| e.to_string());
            Ok(match task {
                Task::Asqp | Task::Acos => {
                    SentimentTuple::quad(&row[0], &row[1], &row[3], pol(&row[2])?)
                }
                Task::Aste => SentimentTuple::aste(&row[0], &row[1], pol(&row[2])?),
                Task::Tasd => SentimentTuple::tasd(&row[0], &row[1], pol(&row[2])?),
            })
        })
        .collect()
}

pub fn parse_records(text: &str, task: Task, path: &Path) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (sentence, literal) = line
            .split_once(SEPARATOR)
            .ok_or_else(|| err(format!("missing {SEPARATOR:?} separator")))?;
        let sentence = sentence.trim();
        if sentence.is_empty() {
            return Err(err("empty sentence".into()));
        }
        let gold = parse_tuple_literal(literal, task).map_err(err)?;
        out.push(Record {
            sentence: sentence.to_string(),
            gold,
        });
    }
    Ok(out)
}

pub fn read_records(path: &Path, task: Task) -> Result<Vec<Record>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text, task, path)
}

fn bind(records: Vec<Record>, spec: &TaskSpec, split: Split) -> Vec<DatasetExample> {
    records
        .into_iter()
        .map(|r| DatasetExample {
            sentence: r.sentence,
            gold: r.gold,
            task: spec.clone(),
            split,
        })
        .collect()
}

/// Loads one split file; the split comes from the file name.
pub fn load_dataset(path: &Path, spec: &TaskSpec) -> Result<Vec<DatasetExample>> {
    Ok(bind(
        read_records(path, spec.task)?,
        spec,
        Split::from_path(path),
    ))
}

fn quote(s: &str) -> String {
    let q = if s.contains('\'') && !s.contains('"') {
        '"'
    } else {
        '\''
    };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(q);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if c == q => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(q);
    out
}

/// Renders an example in the file format.
pub fn format_line(sentence: &str, gold: &[SentimentTuple], task: Task) -> String {
    let rows: Vec<String> = gold
        .iter()
        .map(|t| {
            let pol = t.polarity.file_word().to_string();
            let cat = t.category.clone().unwrap_or_default();
            let opi = t.opinion.clone().unwrap_or_default();
            let fields = match task {
                Task::Asqp | Task::Acos => vec![t.aspect.clone(), cat, pol, opi],
                Task::Aste => vec![t.aspect.clone(), opi, pol],
                Task::Tasd => vec![t.aspect.clone(), cat, pol],
            };
            let quoted: Vec<String> = fields.iter().map(|f| quote(f)).collect();
            format!("[{}]", quoted.join(", "))
        })
        .collect();
    format!("{sentence}{SEPARATOR}[{}]", rows.join(", "))
}

pub fn write_dataset(path: &Path, examples: &[DatasetExample]) -> Result<()> {
    let mut out = String::new();
    for e in examples {
        out.push_str(&format_line(&e.sentence, &e.gold, e.task.task));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Sorted distinct categories across records.
pub fn collect_categories<'a>(records: impl IntoIterator<Item = &'a Record>) -> Vec<String> {
    records
        .into_iter()
        .flat_map(|r| r.gold.iter().filter_map(|t| t.category.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// The train/dev/test files of one dataset directory.
#[derive(Clone, Debug)]
pub struct DatasetDir {
    pub spec: TaskSpec,
    pub root: PathBuf,
    pub splits: Vec<(Split, Vec<DatasetExample>)>,
}

impl DatasetDir {
    /// Reads `{train,dev,test}.txt` under `root`, whichever exist. The
    /// category vocabulary is the union of categories across the splits.
    pub fn open(root: &Path, task: Task, name: &str) -> Result<Self> {
        let mut raw = Vec::new();
        for split in Split::ALL {
            let path = root.join(format!("{}.txt", split.name()));
            if path.exists() {
                raw.push((split, read_records(&path, task)?));
            }
        }
        if raw.is_empty() {
            return Err(Error::Invalid(format!(
                "no train/dev/test files under {}",
                root.display()
            )));
        }
        let categories = collect_categories(raw.iter().flat_map(|(_, r)| r));
        let spec = TaskSpec::new(task, name, categories)?;
        let splits = raw
            .into_iter()
            .map(|(split, records)| (split, bind(records, &spec, split)))
            .collect();
        Ok(DatasetDir {
            spec,
            root: root.to_path_buf(),
            splits,
        })
    }

    pub fn split(&self, split: Split) -> Option<&[DatasetExample]> {
        self.splits
            .iter()
            .find(|(s, _)| *s == split)
            .map(|(_, e)| e.as_slice())
    }
}

/// Pairs for one example, in the order of `orders`.
pub fn example_pairs(
    example: &DatasetExample,
    orders: &[ElementOrder],
    task_prefix: Option<&str>,
) -> Result<Vec<TrainingPair>> {
    orders
        .iter()
        .map(|order| {
            Ok(TrainingPair {
                input: build_input(&example.sentence, order, task_prefix),
                target: serialize_target(&example.gold, order)?,
                order: order.clone(),
            })
        })
        .collect()
}

/// `|dataset| × |orders|` pairs, examples major, orders minor.
pub fn build_training_pairs(
    dataset: &[DatasetExample],
    orders: &[ElementOrder],
    task_prefix: Option<&str>,
) -> Result<Vec<TrainingPair>> {
    if orders.is_empty() {
        return Err(Error::Invalid("at least one order is required".into()));
    }
    let mut out = Vec::with_capacity(dataset.len() * orders.len());
    for example in dataset {
        out.extend(example_pairs(example, orders, task_prefix)?);
    }
    Ok(out)
}

/// Number of examples kept by [`subsample`].
pub fn subsample_size(len: usize, fraction: f64) -> usize {
    if len == 0 {
        return 0;
    }
    // the epsilon absorbs products such as 100 * 0.29 = 28.999999999999996
    ((len as f64 * fraction + 1e-9).floor() as usize).clamp(1, len)
}

/// Seeded sample without replacement, keeping the original order.
pub fn subsample(
    dataset: &[DatasetExample],
    fraction: f64,
    seed: u64,
) -> Result<Vec<DatasetExample>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Invalid(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    let n = subsample_size(dataset.len(), fraction);
    if n == dataset.len() {
        return Ok(dataset.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, dataset.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| dataset[i].clone()).collect())
}

/// An example carrying its `"TASK: DATASET: "` prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixedExample {
    pub prefix: String,
    pub example: DatasetExample,
}

impl PrefixedExample {
    pub fn input(&self, order: &ElementOrder) -> String {
        build_input(&self.example.sentence, order, Some(&self.prefix))
    }
}

#[derive(Clone, Debug, Default)]
pub struct MultitaskCorpus {
    pub train: Vec<PrefixedExample>,
    pub dev: Vec<PrefixedExample>,
    /// Training examples dropped for overlapping a test sentence.
    pub dropped: usize,
}

/// Train size of the 9:1 split.
pub fn multitask_train_size(n: usize) -> usize {
    (0.9 * n as f64).round() as usize
}

/// Pools every training set, drops sentences that occur in any test set,
/// then splits the rest 9:1 into train and dev after a seeded shuffle.
pub fn build_multitask(
    train_sets: &[(TaskSpec, Vec<DatasetExample>)],
    test_sets: &[(TaskSpec, Vec<DatasetExample>)],
    split_seed: u64,
) -> MultitaskCorpus {
    let test_sentences: HashSet<String> = test_sets
        .iter()
        .flat_map(|(_, examples)| examples.iter().map(|e| normalize_text(&e.sentence)))
        .collect();
    let mut pool = Vec::new();
    let mut dropped = 0;
    for (spec, examples) in train_sets {
        let prefix = spec.prefix();
        for e in examples {
            if test_sentences.contains(&normalize_text(&e.sentence)) {
                dropped += 1;
                continue;
            }
            pool.push(PrefixedExample {
                prefix: prefix.clone(),
                example: e.clone(),
            });
        }
    }
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
    let dev = pool.split_off(multitask_train_size(pool.len()));
    MultitaskCorpus {
        train: pool,
        dev,
        dropped,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub sentences: usize,
    pub pos: usize,
    pub neu: usize,
    pub neg: usize,
}

impl SplitStats {
    pub fn of(examples: &[DatasetExample]) -> Self {
        let mut s = SplitStats {
            sentences: examples.len(),
            ..Default::default()
        };
        for t in examples.iter().flat_map(|e| &e.gold) {
            match t.polarity {
                Polarity::Pos => s.pos += 1,
                Polarity::Neu => s.neu += 1,
                Polarity::Neg => s.neg += 1,
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub task: Task,
    pub dataset: String,
    /// Distinct categories, `None` for tasks without them.
    pub categories: Option<usize>,
    pub splits: Vec<(Split, SplitStats)>,
}

impl DatasetStats {
    pub fn split(&self, split: Split) -> Option<SplitStats> {
        self.splits
            .iter()
            .find(|(s, _)| *s == split)
            .map(|(_, s)| *s)
    }
}

fn count_records(records: &[Record]) -> SplitStats {
    let mut s = SplitStats {
        sentences: records.len(),
        ..Default::default()
    };
    for t in records.iter().flat_map(|r| &r.gold) {
        match t.polarity {
            Polarity::Pos => s.pos += 1,
            Polarity::Neu => s.neu += 1,
            Polarity::Neg => s.neg += 1,
        }
    }
    s
}

/// Statistics straight from the split files under `root`. Unlike
/// [`DatasetDir::open`] this accepts files with no tuples at all.
pub fn scan_stats(root: &Path, task: Task, name: &str) -> Result<DatasetStats> {
    let mut splits = Vec::new();
    let mut categories = BTreeSet::new();
    for split in Split::ALL {
        let path = root.join(format!("{}.txt", split.name()));
        if path.exists() {
            let records = read_records(&path, task)?;
            categories.extend(collect_categories(&records));
            splits.push((split, count_records(&records)));
        }
    }
    if splits.is_empty() {
        return Err(Error::Invalid(format!(
            "no train/dev/test files under {}",
            root.display()
        )));
    }
    Ok(DatasetStats {
        task,
        dataset: name.to_string(),
        categories: task
            .has(crate::schema::ElementKind::Category)
            .then_some(categories.len()),
        splits,
    })
}

pub fn dataset_stats(dir: &DatasetDir) -> DatasetStats {
    DatasetStats {
        task: dir.spec.task,
        dataset: dir.spec.dataset.clone(),
        categories: dir
            .spec
            .task
            .has(crate::schema::ElementKind::Category)
            .then(|| dir.spec.categories().len()),
        splits: dir
            .splits
            .iter()
            .map(|(s, e)| (*s, SplitStats::of(e)))
            .collect(),
    }
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Task | dataset | #Cat | train | dev | test, each split as
/// `sentences (POS/NEU/NEG)`.
pub fn format_stats_table(stats: &[DatasetStats]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<5} {:<11} {:>5}  {:<26} {:<26} {:<26}",
        "Task", "Dataset", "#Cat", "Train (POS/NEU/NEG)", "Dev (POS/NEU/NEG)", "Test (POS/NEU/NEG)"
    );
    for s in stats {
        let cell = |split| match s.split(split) {
            Some(x) => format!(
                "{} ({}/{}/{})",
                thousands(x.sentences),
                thousands(x.pos),
                thousands(x.neu),
                thousands(x.neg)
            ),
            None => "-".to_string(),
        };
        let _ = writeln!(
            out,
            "{:<5} {:<11} {:>5}  {:<26} {:<26} {:<26}",
            s.task.name(),
            s.dataset,
            s.categories.map_or("-".to_string(), |c| c.to_string()),
            cell(Split::Train),
            cell(Split::Dev),
            cell(Split::Test)
        );
    }
    out
}

/// One expected statistic, `TASK DATASET SPLIT SENTENCES POS NEU NEG` or
/// `TASK DATASET categories N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expectation {
    Split {
        task: Task,
        dataset: String,
        split: Split,
        stats: SplitStats,
    },
    Categories {
        task: Task,
        dataset: String,
        count: usize,
    },
}

pub fn parse_expectations(text: &str, path: &Path) -> Result<Vec<Expectation>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: &str| Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: message.to_string(),
        };
        let f: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| {
            s.replace(',', "")
                .parse::<usize>()
                .map_err(|_| err("expected a number"))
        };
        let task: Task = f.first().ok_or_else(|| err("empty line"))?.parse()?;
        let dataset = f.get(1).ok_or_else(|| err("missing dataset"))?.to_string();
        match f.get(2).copied() {
            Some("categories") if f.len() == 4 => out.push(Expectation::Categories {
                task,
                dataset,
                count: num(f[3])?,
            }),
            Some(split) if f.len() == 7 => {
                let split = match split {
                    "train" => Split::Train,
                    "dev" => Split::Dev,
                    "test" => Split::Test,
                    _ => return Err(err("unknown split")),
                };
                out.push(Expectation::Split {
                    task,
                    dataset,
                    split,
                    stats: SplitStats {
                        sentences: num(f[3])?,
                        pos: num(f[4])?,
                        neu: num(f[5])?,
                        neg: num(f[6])?,
                    },
                })
            }
            _ => {
                return Err(err(
                    "expected `TASK DATASET SPLIT N POS NEU NEG` or `TASK DATASET categories N`",
                ))
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExpectationReport {
    pub checked: usize,
    /// Expectations about datasets absent from the stats.
    pub skipped: usize,
    pub problems: Vec<String>,
}

impl ExpectationReport {
    pub fn holds(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Compares `stats` with `expected`; datasets missing from `stats` are
/// counted as skipped.
pub fn check_expectations(stats: &[DatasetStats], expected: &[Expectation]) -> ExpectationReport {
    let find = |task: Task, dataset: &str| {
        stats
            .iter()
            .find(|s| s.task == task && s.dataset.eq_ignore_ascii_case(dataset))
    };
    let mut report = ExpectationReport::default();
    for e in expected {
        let (task, dataset) = match e {
            Expectation::Split { task, dataset, .. }
            | Expectation::Categories { task, dataset, .. } => (*task, dataset),
        };
        let Some(s) = find(task, dataset) else {
            report.skipped += 1;
            continue;
        };
        report.checked += 1;
        match e {
            Expectation::Split {
                split, stats: want, ..
            } => match s.split(*split) {
                Some(got) if got == *want => {}
                got => report.problems.push(format!(
                    "{task} {dataset} {split}: expected {want:?}, found {got:?}"
                )),
            },
            Expectation::Categories { count, .. } => {
                if s.categories != Some(*count) {
                    report.problems.push(format!(
                        "{task} {dataset}: expected {count} categories, found {:?}",
                        s.categories
                    ));
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_target;

    fn asqp_spec() -> TaskSpec {
        TaskSpec::new(Task::Asqp, "Rest15", vec!["food quality".into()]).unwrap()
    }

    #[test]
    fn parses_fixture_line() {
        let recs = parse_records(
            "good food####[['food', 'food quality', 'positive', 'good']]\n",
            Task::Asqp,
            Path::new("train.txt"),
        )
        .unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(
            recs[0].gold,
            vec![SentimentTuple::quad(
                "food",
                "food quality",
                "good",
                Polarity::Pos
            )]
        );
    }

    #[test]
    fn parses_triplet_layouts_and_quotes() {
        let recs = parse_records(
            "it's fine####[[\"it's\", 'fine', 'neutral'], ('x', 'y', 'NEG',)]",
            Task::Aste,
            Path::new("t.txt"),
        )
        .unwrap();
        assert_eq!(
            recs[0].gold[0],
            SentimentTuple::aste("it's", "fine", Polarity::Neu)
        );
        assert_eq!(
            recs[0].gold[1],
            SentimentTuple::aste("x", "y", Polarity::Neg)
        );
        let recs = parse_records(
            "s####[['NULL', 'restaurant general', 'negative']]",
            Task::Tasd,
            Path::new("t.txt"),
        )
        .unwrap();
        assert_eq!(
            recs[0].gold[0],
            SentimentTuple::tasd("NULL", "restaurant general", Polarity::Neg)
        );
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let p = Path::new("bad.txt");
        let cases = [
            "ok####[['a', 'b', 'positive', 'c']]\nno separator here",
            "ok####[['a', 'b', 'positive', 'c']]\nx####[['a', 'b', 'positive']]",
            "ok####[['a', 'b', 'positive', 'c']]\nx####[['a', 'b', 'glad', 'c']]",
            "ok####[['a', 'b', 'positive', 'c']]\nx####[['a', 'b', 'positive', 'c']] junk",
            "ok####[['a', 'b', 'positive', 'c']]\nx####[['a, 'b', 'positive', 'c']]",
        ];
        for text in cases {
            let err = parse_records(text, Task::Asqp, p).unwrap_err();
            assert!(err.to_string().starts_with("bad.txt:2:"), "{err}");
        }
    }

    #[test]
    fn writer_round_trips() {
        let spec = asqp_spec();
        let gold = vec![
            SentimentTuple::quad("it's \"odd\"", "food quality", "NULL", Polarity::Neu),
            SentimentTuple::quad("back\\slash", "food quality", "it's", Polarity::Pos),
        ];
        let line = format_line("a sentence", &gold, Task::Asqp);
        let recs = parse_records(&line, Task::Asqp, Path::new("x")).unwrap();
        assert_eq!(recs[0].gold, gold);
        assert_eq!(recs[0].gold[0].aspect, "it's \"odd\"");
        let _ = spec;
    }

    #[test]
    fn split_from_path() {
        assert_eq!(
            Split::from_path(Path::new("data/asqp/rest15/test.txt")),
            Split::Test
        );
        assert_eq!(Split::from_path(Path::new("dev.txt")), Split::Dev);
        assert_eq!(Split::from_path(Path::new("train.txt")), Split::Train);
    }

    fn examples(n: usize) -> Vec<DatasetExample> {
        (0..n)
            .map(|i| DatasetExample {
                sentence: format!("sentence {i}"),
                gold: vec![SentimentTuple::quad(
                    "food",
                    "food quality",
                    "good",
                    Polarity::Pos,
                )],
                task: asqp_spec(),
                split: Split::Train,
            })
            .collect()
    }

    #[test]
    fn pair_count_and_order() {
        let data = examples(3);
        let orders: Vec<ElementOrder> = crate::orders::enumerate_orders(Task::Asqp)[..5].to_vec();
        let pairs = build_training_pairs(&data, &orders, None).unwrap();
        assert_eq!(pairs.len(), 15);
        assert!(pairs[..5]
            .iter()
            .all(|p| p.input.starts_with("sentence 0 ")));
        assert_eq!(pairs[1].order, orders[1]);
        for p in &pairs {
            let (ts, diag) = parse_target(&p.target, &asqp_spec());
            assert!(diag.is_clean());
            assert_eq!(ts, data[0].gold);
        }
        assert!(build_training_pairs(&data, &[], None).is_err());
    }

    #[test]
    fn subsample_sizes() {
        assert_eq!(subsample_size(834, 0.1), 83);
        assert_eq!(subsample_size(834, 0.01), 8);
        assert_eq!(subsample_size(834, 1.0), 834);
        assert_eq!(subsample_size(50, 0.001), 1);
        assert_eq!(subsample_size(100, 0.29), 29);
        assert_eq!(subsample_size(0, 0.5), 0);
    }

    #[test]
    fn subsample_is_seeded_and_ordered() {
        let data = examples(100);
        let a = subsample(&data, 0.2, 3).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(a, subsample(&data, 0.2, 3).unwrap());
        assert_ne!(a, subsample(&data, 0.2, 4).unwrap());
        let idx: Vec<usize> = a.iter().map(|e| e.sentence[9..].parse().unwrap()).collect();
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(subsample(&data, 1.0, 0).unwrap(), data);
        assert!(subsample(&data, 0.0, 0).is_err());
        assert!(subsample(&data, 1.5, 0).is_err());
    }

    #[test]
    fn multitask_filters_and_splits() {
        let spec = asqp_spec();
        let train = examples(21);
        let mut test = examples(0);
        test.push(DatasetExample {
            sentence: "  SENTENCE   3 ".into(),
            ..train[0].clone()
        });
        let corpus = build_multitask(&[(spec.clone(), train)], &[(spec, test)], 1);
        assert_eq!(corpus.dropped, 1);
        assert_eq!(corpus.train.len(), 18);
        assert_eq!(corpus.dev.len(), 2);
        for p in corpus.train.iter().chain(&corpus.dev) {
            assert_ne!(p.example.sentence, "sentence 3");
            let order: ElementOrder = "[A][C][O][S]".parse().unwrap();
            assert!(p.input(&order).starts_with("ASQP: Rest15: "));
        }
    }

    #[test]
    fn stats_count_polarities() {
        let mut data = examples(2);
        data[1].gold.push(SentimentTuple::quad(
            "x",
            "food quality",
            "y",
            Polarity::Neg,
        ));
        let s = SplitStats::of(&data);
        assert_eq!(
            s,
            SplitStats {
                sentences: 2,
                pos: 2,
                neu: 0,
                neg: 1
            }
        );
        assert_eq!(SplitStats::of(&[]), SplitStats::default());
    }

    #[test]
    fn expectations_parse_and_check() {
        let exp = parse_expectations(
            "# table\nASQP Rest15 train 834 1,005 34 315\nASQP Rest15 categories 13\n",
            Path::new("e"),
        )
        .unwrap();
        let stats = DatasetStats {
            task: Task::Asqp,
            dataset: "rest15".into(),
            categories: Some(13),
            splits: vec![(
                Split::Train,
                SplitStats {
                    sentences: 834,
                    pos: 1005,
                    neu: 34,
                    neg: 315,
                },
            )],
        };
        let report = check_expectations(std::slice::from_ref(&stats), &exp);
        assert!(report.holds());
        assert_eq!((report.checked, report.skipped), (2, 0));
        let mut off = stats;
        off.splits[0].1.neg = 314;
        assert_eq!(check_expectations(&[off], &exp).problems.len(), 1);
        assert_eq!(check_expectations(&[], &exp).skipped, 2);
    }

    #[test]
    fn stats_table_layout() {
        let stats = DatasetStats {
            task: Task::Asqp,
            dataset: "Rest15".into(),
            categories: Some(13),
            splits: vec![(
                Split::Train,
                SplitStats {
                    sentences: 834,
                    pos: 1005,
                    neu: 34,
                    neg: 315,
                },
            )],
        };
        let table = format_stats_table(&[stats]);
        assert!(table.contains("834 (1,005/34/315)"), "{table}");
    }
}

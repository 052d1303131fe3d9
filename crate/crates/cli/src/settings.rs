//! Flag and config-file resolution. Flags win over `--config` values,
//! which win over built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use mvp_core::backend::ScoreMode;
use mvp_core::config::load_key_values;
use mvp_core::data::{DatasetDir, Split};
use mvp_core::orders::DEFAULT_VIEWS;
use mvp_core::schema::Task;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Vote,
    Rank,
    Random,
    SvpRandom,
    SvpHeuristic,
    SvpRank,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Vote => "vote",
            Strategy::Rank => "rank",
            Strategy::Random => "random",
            Strategy::SvpRandom => "svp-random",
            Strategy::SvpHeuristic => "svp-heuristic",
            Strategy::SvpRank => "svp-rank",
        }
    }

    pub fn is_single_view(self) -> bool {
        matches!(
            self,
            Strategy::SvpRandom | Strategy::SvpHeuristic | Strategy::SvpRank
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScoreModeArg {
    Mean,
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Dev,
    Test,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// `key = value` file supplying defaults for any flag below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// asqp, acos, aste or tasd.
    #[arg(long, global = true)]
    pub task: Option<String>,
    /// Directory with train/dev/test.txt, optionally `TASK=DIR`. Repeatable.
    #[arg(long, global = true)]
    pub dataset: Vec<String>,
    /// Backend URL, `mock:uniform`, `mock:gold[:NOISE]` or `mock:table:PATH`.
    #[arg(long, global = true)]
    pub backend: Option<String>,
    /// Ranked orders, one marker string per line, as written by select-orders.
    #[arg(long = "orders-file", global = true)]
    pub orders_file: Option<PathBuf>,
    /// Number of views.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Seed for subsampling, mocks, random aggregation and the multi-task split.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// How views are combined (default vote).
    #[arg(long, global = true, value_enum)]
    pub strategy: Option<Strategy>,
    /// Training fraction in (0, 1].
    #[arg(long, global = true)]
    pub fraction: Option<f64>,
    /// Prefix inputs with `TASK: DATASET: ` and pool datasets.
    #[arg(long, global = true)]
    pub multitask: bool,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file; each command has its own default.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Piece vocabulary, one piece per line.
    #[arg(long, global = true)]
    pub vocab: Option<PathBuf>,
    /// Reduce sequence log-probabilities by per-token mean or sum.
    #[arg(long = "score-mode", global = true, value_enum)]
    pub score_mode: Option<ScoreModeArg>,
    /// Generation budget per view.
    #[arg(long = "max-tokens", global = true)]
    pub max_tokens: Option<usize>,
    /// Split to read (infer and evaluate default to test).
    #[arg(long, global = true, value_enum)]
    pub split: Option<SplitArg>,
}

#[derive(Clone, Debug)]
pub struct DatasetArg {
    pub task: Task,
    pub dir: PathBuf,
}

impl DatasetArg {
    pub fn name(&self) -> String {
        self.dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.dir.display().to_string())
    }

    pub fn open(&self) -> Result<DatasetDir> {
        DatasetDir::open(&self.dir, self.task, &self.name())
            .with_context(|| format!("loading {}", self.dir.display()))
    }
}

/// Fully resolved settings.
#[derive(Clone, Debug)]
pub struct Settings {
    pub datasets: Vec<DatasetArg>,
    pub backend: Option<String>,
    pub orders_file: Option<PathBuf>,
    pub m: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub fraction: f64,
    pub multitask: bool,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub score_mode: ScoreMode,
    pub max_tokens: usize,
    pub split: Option<Split>,
    /// Raw config entries, for backend keys.
    pub raw: BTreeMap<String, String>,
}

fn parse_value<T: ValueEnum>(key: &str, value: &str) -> Result<T> {
    T::from_str(value, true).map_err(|e| anyhow::anyhow!("config key {key}: {e}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow::anyhow!("config key {key}: {e}"))
}

fn split_of(arg: SplitArg) -> Split {
    match arg {
        SplitArg::Train => Split::Train,
        SplitArg::Dev => Split::Dev,
        SplitArg::Test => Split::Test,
    }
}

impl Settings {
    pub fn resolve(flags: &Common) -> Result<Settings> {
        let raw = match &flags.config {
            Some(path) => load_key_values(path)?,
            None => BTreeMap::new(),
        };
        let get = |key: &str| raw.get(key).map(String::as_str);

        let task = match flags.task.as_deref().or(get("task")) {
            Some(t) => Some(t.parse::<Task>()?),
            None => None,
        };
        let dataset_specs: Vec<String> = if flags.dataset.is_empty() {
            get("dataset")
                .map(|d| d.split(',').map(|s| s.trim().to_string()).collect())
                .unwrap_or_default()
        } else {
            flags.dataset.clone()
        };
        let datasets = dataset_specs
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| parse_dataset(s, task))
            .collect::<Result<Vec<_>>>()?;

        let m = match (flags.m, get("m")) {
            (Some(m), _) => m,
            (None, Some(v)) => parse_num("m", v)?,
            (None, None) => DEFAULT_VIEWS,
        };
        if m == 0 {
            bail!("--m must be at least 1");
        }
        let fraction = match (flags.fraction, get("fraction")) {
            (Some(f), _) => f,
            (None, Some(v)) => parse_num("fraction", v)?,
            (None, None) => 1.0,
        };
        if !(fraction > 0.0 && fraction <= 1.0) {
            bail!("--fraction must be in (0, 1], got {fraction}");
        }
        let strategy = match (flags.strategy, get("strategy")) {
            (Some(s), _) => s,
            (None, Some(v)) => parse_value("strategy", v)?,
            (None, None) => Strategy::Vote,
        };
        let score_mode = match (flags.score_mode, get("score_mode")) {
            (Some(s), _) => s,
            (None, Some(v)) => parse_value("score_mode", v)?,
            (None, None) => ScoreModeArg::Mean,
        };
        let split = match (flags.split, get("split")) {
            (Some(s), _) => Some(split_of(s)),
            (None, Some(v)) => Some(split_of(parse_value("split", v)?)),
            (None, None) => None,
        };
        let num = |flag: Option<usize>, key: &str, default: usize| -> Result<usize> {
            match (flag, get(key)) {
                (Some(v), _) => Ok(v),
                (None, Some(v)) => parse_num(key, v),
                (None, None) => Ok(default),
            }
        };
        let multitask = flags.multitask
            || match get("multitask") {
                Some(v) => parse_num::<bool>("multitask", v)?,
                None => false,
            };
        let path = |flag: &Option<PathBuf>, key: &str| {
            flag.clone().or_else(|| get(key).map(PathBuf::from))
        };

        Ok(Settings {
            datasets,
            backend: flags
                .backend
                .clone()
                .or_else(|| get("backend").map(str::to_string))
                .or_else(|| std::env::var(mvp_core::backend::remote::ENV_URL).ok()),
            orders_file: path(&flags.orders_file, "orders_file"),
            m,
            seed: match (flags.seed, get("seed")) {
                (Some(s), _) => s,
                (None, Some(v)) => parse_num("seed", v)?,
                (None, None) => 0,
            },
            strategy,
            fraction,
            multitask,
            jobs: num(flags.jobs, "jobs", 4)?.max(1),
            out: path(&flags.out, "out"),
            vocab: path(&flags.vocab, "vocab"),
            score_mode: match score_mode {
                ScoreModeArg::Mean => ScoreMode::Mean,
                ScoreModeArg::Sum => ScoreMode::Sum,
            },
            max_tokens: num(flags.max_tokens, "max_tokens", 512)?,
            split,
            raw: raw.clone(),
        })
    }

    pub fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    pub fn require_datasets(&self) -> Result<&[DatasetArg]> {
        if self.datasets.is_empty() {
            bail!("at least one --dataset is required");
        }
        Ok(&self.datasets)
    }

    pub fn require_orders_file(&self) -> Result<&Path> {
        self.orders_file
            .as_deref()
            .context("--orders-file is required")
    }

    /// The single task shared by every dataset.
    pub fn single_task(&self) -> Result<Task> {
        let datasets = self.require_datasets()?;
        let task = datasets[0].task;
        if datasets.iter().any(|d| d.task != task) {
            bail!("all datasets must share one task here");
        }
        Ok(task)
    }

    pub fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .context("building the worker pool")
    }
}

fn parse_dataset(spec: &str, default_task: Option<Task>) -> Result<DatasetArg> {
    let (task, dir) = match spec.split_once('=') {
        Some((t, dir)) => (t.parse::<Task>()?, dir),
        None => match default_task {
            Some(t) => (t, spec),
            None => bail!("--task is required for dataset {spec}"),
        },
    };
    Ok(DatasetArg {
        task,
        dir: PathBuf::from(dir),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let s = Settings::resolve(&Common::default()).unwrap();
        assert_eq!(s.m, 5);
        assert_eq!(s.strategy, Strategy::Vote);
        assert_eq!(s.fraction, 1.0);
    }

    #[test]
    fn flags_override_config() {
        let dir = std::env::temp_dir().join(format!("mvp-settings-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(
            &path,
            "task = aste\nm = 3\nseed = 9\nstrategy = svp-heuristic\ndataset = a, tasd=b\n",
        )
        .unwrap();
        let flags = Common {
            config: Some(path),
            m: Some(4),
            ..Default::default()
        };
        let s = Settings::resolve(&flags).unwrap();
        assert_eq!(s.m, 4);
        assert_eq!(s.seed, 9);
        assert_eq!(s.datasets[0].task, Task::Aste);
        assert_eq!(s.strategy, Strategy::SvpHeuristic);
        assert_eq!(s.datasets.len(), 2);
        assert_eq!(s.datasets[1].task, Task::Tasd);
    }

    #[test]
    fn rejects_bad_values() {
        let flags = Common {
            fraction: Some(0.0),
            ..Default::default()
        };
        assert!(Settings::resolve(&flags).is_err());
        let flags = Common {
            m: Some(0),
            ..Default::default()
        };
        assert!(Settings::resolve(&flags).is_err());
        let flags = Common {
            dataset: vec!["dir".into()],
            ..Default::default()
        };
        assert!(Settings::resolve(&flags).is_err());
    }
}

//! `--backend` specs: an HTTP URL or one of the in-process mocks.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mvp_core::backend::remote::{RemoteBackend, RemoteConfig};
use mvp_core::backend::table::{TableBackend, TableFile};
use mvp_core::backend::{stable_hash, Backend};
use mvp_core::decoding::{PieceVocab, Tokenizer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::settings::Settings;

#[derive(Clone, Debug, PartialEq)]
pub enum BackendSpec {
    Remote(String),
    /// Uniform next tokens, pseudo-random scores.
    Uniform,
    /// Replays each gold target; a `noise` fraction of views fall back to
    /// uniform choices.
    Gold {
        noise: f64,
    },
    Table(PathBuf),
}

impl BackendSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        if spec.starts_with("http://") || spec.starts_with("https://") {
            return Ok(BackendSpec::Remote(spec.to_string()));
        }
        let Some(mock) = spec.strip_prefix("mock:") else {
            bail!("unknown backend {spec:?}; expected a URL or mock:<spec>");
        };
        let (kind, arg) = match mock.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (mock, None),
        };
        match (kind, arg) {
            ("uniform", None) => Ok(BackendSpec::Uniform),
            ("gold", None) => Ok(BackendSpec::Gold { noise: 0.0 }),
            ("gold", Some(n)) => {
                let noise: f64 = n.parse().with_context(|| format!("gold noise {n:?}"))?;
                if !(0.0..=1.0).contains(&noise) {
                    bail!("gold noise must be in [0, 1], got {noise}");
                }
                Ok(BackendSpec::Gold { noise })
            }
            ("table", Some(path)) if !path.is_empty() => Ok(BackendSpec::Table(path.into())),
            _ => bail!("unknown mock backend {spec:?}"),
        }
    }
}

/// A gold target to replay for one model input.
pub struct Script {
    pub input: String,
    pub target: String,
}

pub struct Loaded {
    pub backend: Box<dyn Backend>,
    /// Tokenizer artifact advertised by a remote backend.
    pub artifact: Option<String>,
}

fn remote_config(url: &str, settings: &Settings) -> Result<RemoteConfig> {
    let mut config = RemoteConfig::new(url);
    config.apply_map(&settings.raw)?;
    // an explicit --backend URL beats a url key in the config file
    config.base_url = url.trim_end_matches('/').to_string();
    config.apply_env()?;
    Ok(config)
}

/// Builds the backend. `scripts` are only used by `mock:gold`.
pub fn load(
    spec: &BackendSpec,
    settings: &Settings,
    tokenizer: Option<&dyn Tokenizer>,
    scripts: &[Script],
) -> Result<Loaded> {
    let seed = settings.seed;
    let backend: Box<dyn Backend> = match spec {
        BackendSpec::Remote(url) => {
            let client = RemoteBackend::connect(remote_config(url, settings)?)
                .with_context(|| format!("connecting to {url}"))?;
            let artifact = client.capabilities().tokenizer_artifact;
            return Ok(Loaded {
                backend: Box::new(client),
                artifact,
            });
        }
        BackendSpec::Uniform => Box::new(TableBackend::uniform(seed)),
        BackendSpec::Gold { noise } => {
            let mut b = TableBackend::uniform(seed);
            if !scripts.is_empty() {
                let tok = tokenizer.context("mock:gold needs a tokenizer")?;
                for s in scripts {
                    let h = stable_hash(seed, &[s.input.as_bytes(), b"noise"]);
                    if ChaCha8Rng::seed_from_u64(h).gen::<f64>() < *noise {
                        continue;
                    }
                    let mut ids = tok.encode(&s.target);
                    ids.push(tok.eos_id());
                    b.insert_script(&s.input, &ids);
                }
            }
            Box::new(b)
        }
        BackendSpec::Table(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let file: TableFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            Box::new(TableBackend::from_file(file))
        }
    };
    Ok(Loaded {
        backend,
        artifact: None,
    })
}

/// `--vocab`, else the backend's advertised artifact if it is a readable
/// file, else `fallback`.
pub fn tokenizer(
    settings: &Settings,
    artifact: Option<&str>,
    fallback: impl FnOnce() -> PieceVocab,
) -> Result<PieceVocab> {
    if let Some(path) = &settings.vocab {
        return Ok(PieceVocab::load(path)?);
    }
    if let Some(a) = artifact {
        let p = Path::new(a);
        if p.is_file() {
            return Ok(PieceVocab::load(p)?);
        }
        bail!("backend tokenizer {a:?} is not a readable file; pass --vocab");
    }
    Ok(fallback())
}

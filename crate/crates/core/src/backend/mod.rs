//! Scoring and generation backends.
//!
//! A backend answers two questions: how likely is a target sequence given an
//! input ([`Backend::score`]), and which token, among an allowed set, comes
//! next ([`Backend::next_token`]). Fine-tuning the model behind it happens
//! out of process on the pairs emitted by [`crate::data`]; the engine only
//! relies on this contract.

#[cfg(feature = "remote")]
pub mod remote;
pub mod table;
pub mod wire;

#[cfg(feature = "remote")]
pub use remote::{RemoteBackend, RemoteConfig};
pub use table::{TableBackend, TableFile};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoding::TokenId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend does not support {0}")]
    Capability(&'static str),

    #[error("next_token called with an empty allowed set")]
    EmptyAllowed,

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("no table entry for {0}")]
    MissingEntry(String),

    #[error("transport error: {message}")]
    Transport { message: String, retryable: bool },

    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },

    #[error("protocol error: {0}")]
    Protocol(String),
}

impl BackendError {
    /// Whether repeating the same request could succeed.
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport { retryable, .. } => *retryable,
            BackendError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Capabilities {
    pub supports_score: bool,
    pub supports_generate: bool,
    pub tokenizer_artifact: Option<String>,
    pub model_name: Option<String>,
}

/// Summed log-likelihood of a target and the number of tokens it covers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceScore {
    pub logprob_sum: f64,
    pub tokens: u32,
}

impl SequenceScore {
    pub fn from_mean(mean: f64) -> Self {
        SequenceScore {
            logprob_sum: mean,
            tokens: 1,
        }
    }

    pub fn mean(&self) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            self.logprob_sum / self.tokens as f64
        }
    }

    pub fn value(&self, mode: ScoreMode) -> f64 {
        match mode {
            ScoreMode::Mean => self.mean(),
            ScoreMode::Sum => self.logprob_sum,
        }
    }
}

/// How a [`SequenceScore`] is reduced to one number.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    /// Mean per-token log-likelihood.
    #[default]
    Mean,
    /// Raw sequence log-probability.
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TokenChoice {
    pub id: TokenId,
    pub logprob: f64,
}

pub trait Backend: Send + Sync {
    fn capabilities(&self) -> Capabilities;

    /// Conditional likelihood of `target` given `input`.
    fn score(&self, input: &str, target: &str) -> Result<SequenceScore, BackendError>;

    /// Picks the next token. `allowed` is sorted and deduplicated; the
    /// returned id is always one of its members.
    fn next_token(
        &self,
        input: &str,
        prefix: &[TokenId],
        allowed: &[TokenId],
    ) -> Result<TokenChoice, BackendError>;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }

    fn score(&self, input: &str, target: &str) -> Result<SequenceScore, BackendError> {
        (**self).score(input, target)
    }

    fn next_token(
        &self,
        input: &str,
        prefix: &[TokenId],
        allowed: &[TokenId],
    ) -> Result<TokenChoice, BackendError> {
        (**self).next_token(input, prefix, allowed)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }

    fn score(&self, input: &str, target: &str) -> Result<SequenceScore, BackendError> {
        (**self).score(input, target)
    }

    fn next_token(
        &self,
        input: &str,
        prefix: &[TokenId],
        allowed: &[TokenId],
    ) -> Result<TokenChoice, BackendError> {
        (**self).next_token(input, prefix, allowed)
    }
}

/// Wraps a backend and hides one of its capabilities.
pub struct Restricted<B> {
    inner: B,
    score: bool,
    generate: bool,
}

impl<B: Backend> Restricted<B> {
    pub fn score_only(inner: B) -> Self {
        Restricted {
            inner,
            score: true,
            generate: false,
        }
    }

    pub fn generate_only(inner: B) -> Self {
        Restricted {
            inner,
            score: false,
            generate: true,
        }
    }
}

impl<B: Backend> Backend for Restricted<B> {
    fn capabilities(&self) -> Capabilities {
        let mut caps = self.inner.capabilities();
        caps.supports_score &= self.score;
        caps.supports_generate &= self.generate;
        caps
    }

    fn score(&self, input: &str, target: &str) -> Result<SequenceScore, BackendError> {
        if !self.score {
            return Err(BackendError::Capability("score"));
        }
        self.inner.score(input, target)
    }

    fn next_token(
        &self,
        input: &str,
        prefix: &[TokenId],
        allowed: &[TokenId],
    ) -> Result<TokenChoice, BackendError> {
        if !self.generate {
            return Err(BackendError::Capability("next_token"));
        }
        self.inner.next_token(input, prefix, allowed)
    }
}

/// 64-bit FNV-1a over length-prefixed parts; stable across platforms and
/// releases, unlike `DefaultHasher`.
pub fn stable_hash(seed: u64, parts: &[&[u8]]) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut feed = |b: u8| {
        h ^= b as u64;
        h = h.wrapping_mul(PRIME);
    };
    for part in parts {
        for b in (part.len() as u64).to_le_bytes() {
            feed(b);
        }
        for &b in *part {
            feed(b);
        }
    }
    h
}

//! HTTP client for a model served behind the `/v1` protocol.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::wire::{
    InfoResponse, NextTokenRequest, NextTokenResponse, ScoreRequest, ScoreResponse, INFO_PATH,
    NEXT_TOKEN_PATH, SCORE_PATH,
};
use super::{Backend, BackendError, Capabilities, SequenceScore, TokenChoice};
use crate::config::load_key_values;
use crate::decoding::TokenId;
use crate::error::{Error, Result};

pub const ENV_URL: &str = "MVP_BACKEND_URL";
pub const ENV_TOKEN: &str = "MVP_BACKEND_TOKEN";
pub const ENV_TIMEOUT_MS: &str = "MVP_BACKEND_TIMEOUT_MS";

#[derive(Clone, Debug, PartialEq)]
pub struct RemoteConfig {
    pub base_url: String,
    pub timeout: Duration,
    pub auth_token: Option<String>,
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        RemoteConfig {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            timeout: Duration::from_secs(60),
            auth_token: None,
            max_in_flight: 8,
        }
    }

    /// Reads `url`, `timeout_ms`, `auth_token` and `max_in_flight` keys.
    pub fn apply_map(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        if let Some(url) = map.get("url") {
            self.base_url = url.trim_end_matches('/').to_string();
        }
        if let Some(ms) = map.get("timeout_ms") {
            self.timeout = Duration::from_millis(parse_num(ms, "timeout_ms")?);
        }
        if let Some(token) = map.get("auth_token") {
            self.auth_token = Some(token.clone());
        }
        if let Some(n) = map.get("max_in_flight") {
            self.max_in_flight = parse_num::<usize>(n, "max_in_flight")?.max(1);
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        self.apply_map(&load_key_values(path)?)
    }

    /// Environment variables override file values.
    pub fn apply_env(&mut self) -> Result<()> {
        let mut map = BTreeMap::new();
        for (var, key) in [
            (ENV_URL, "url"),
            (ENV_TOKEN, "auth_token"),
            (ENV_TIMEOUT_MS, "timeout_ms"),
        ] {
            if let Ok(v) = std::env::var(var) {
                map.insert(key.to_string(), v);
            }
        }
        self.apply_map(&map)
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("{key} must be a number, got {value:?}")))
}

/// Counting semaphore bounding concurrent requests.
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Limiter {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct RemoteBackend {
    config: RemoteConfig,
    agent: ureq::Agent,
    limiter: Limiter,
    info: Option<InfoResponse>,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        let limiter = Limiter::new(config.max_in_flight.max(1));
        RemoteBackend {
            config,
            agent,
            limiter,
            info: None,
        }
    }

    /// Creates the client and fetches `/v1/info`.
    pub fn connect(config: RemoteConfig) -> Result<Self, BackendError> {
        let mut backend = RemoteBackend::new(config);
        backend.info = Some(backend.info()?);
        Ok(backend)
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    pub fn info(&self) -> Result<InfoResponse, BackendError> {
        let _permit = self.limiter.acquire();
        let req = self.request("GET", INFO_PATH);
        decode(req.call())
    }

    fn request(&self, method: &str, path: &str) -> ureq::Request {
        let req = self
            .agent
            .request(method, &format!("{}{}", self.config.base_url, path));
        match &self.config.auth_token {
            Some(token) => req.set("Authorization", &format!("Bearer {token}")),
            None => req,
        }
    }

    fn post<B: Serialize, R: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<R, BackendError> {
        let _permit = self.limiter.acquire();
        decode(self.request("POST", path).send_json(body))
    }
}

fn decode<R: DeserializeOwned>(
    result: std::result::Result<ureq::Response, ureq::Error>,
) -> Result<R, BackendError> {
    match result {
        Ok(resp) => resp
            .into_json::<R>()
            .map_err(|e| BackendError::Protocol(format!("malformed response body: {e}"))),
        Err(ureq::Error::Status(status, resp)) => Err(BackendError::Status {
            status,
            body: resp.into_string().unwrap_or_default(),
        }),
        Err(ureq::Error::Transport(t)) => Err(BackendError::Transport {
            message: t.to_string(),
            retryable: !matches!(
                t.kind(),
                ureq::ErrorKind::InvalidUrl | ureq::ErrorKind::UnknownScheme
            ),
        }),
    }
}

impl Backend for RemoteBackend {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            supports_score: true,
            supports_generate: true,
            tokenizer_artifact: self.info.as_ref().map(|i| i.tokenizer_artifact.clone()),
            model_name: self.info.as_ref().map(|i| i.model_name.clone()),
        }
    }

    fn score(&self, input: &str, target: &str) -> Result<SequenceScore, BackendError> {
        if input.is_empty() || target.is_empty() {
            return Err(BackendError::InvalidRequest(
                "score needs a non-empty input and target".into(),
            ));
        }
        let resp: ScoreResponse = self.post(
            SCORE_PATH,
            &ScoreRequest {
                input: input.to_string(),
                target: target.to_string(),
            },
        )?;
        if !resp.logprob_sum.is_finite() {
            return Err(BackendError::Protocol(format!(
                "non-finite logprob_sum {}",
                resp.logprob_sum
            )));
        }
        Ok(SequenceScore {
            logprob_sum: resp.logprob_sum,
            tokens: resp.tokens,
        })
    }

    fn next_token(
        &self,
        input: &str,
        prefix: &[TokenId],
        allowed: &[TokenId],
    ) -> Result<TokenChoice, BackendError> {
        if allowed.is_empty() {
            return Err(BackendError::EmptyAllowed);
        }
        let resp: NextTokenResponse = self.post(
            NEXT_TOKEN_PATH,
            &NextTokenRequest {
                input: input.to_string(),
                prefix_ids: prefix.to_vec(),
                allowed_ids: allowed.to_vec(),
            },
        )?;
        if allowed.binary_search(&resp.id).is_err() {
            return Err(BackendError::Protocol(format!(
                "server returned id {} outside the allowed set",
                resp.id
            )));
        }
        if !resp.logprob.is_finite() {
            return Err(BackendError::Protocol(format!(
                "non-finite logprob {}",
                resp.logprob
            )));
        }
        Ok(TokenChoice {
            id: resp.id,
            logprob: resp.logprob,
        })
    }
}

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{stable_hash, Backend, BackendError, Capabilities, SequenceScore, TokenChoice};
use crate::decoding::TokenId;

/// In-process mock backend driven by explicit tables.
///
/// Scores come from an `(input, target)` table; next tokens from an
/// `(input, prefix)` table. Anything not in the tables falls back to a
/// choice seeded from `(seed, input, prefix)`, uniform over the allowed
/// set, so results never depend on call order or thread schedule.
#[derive(Clone, Debug, Default)]
pub struct TableBackend {
    seed: u64,
    scores: HashMap<(String, String), SequenceScore>,
    next: HashMap<(String, Vec<TokenId>), TokenId>,
    hashed_scores: bool,
}

/// On-disk form of a [`TableBackend`].
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TableFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub hashed_scores: bool,
    #[serde(default)]
    pub scores: Vec<ScoreEntry>,
    #[serde(default)]
    pub next: Vec<NextEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub input: String,
    pub target: String,
    pub score: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NextEntry {
    pub input: String,
    pub prefix: Vec<TokenId>,
    pub id: TokenId,
}

impl TableBackend {
    pub fn new(seed: u64) -> Self {
        TableBackend {
            seed,
            ..Default::default()
        }
    }

    /// Uniform next-token choices and pseudo-random scores for every pair.
    pub fn uniform(seed: u64) -> Self {
        TableBackend::new(seed).with_hashed_scores()
    }

    /// Unknown `(input, target)` pairs get a seeded pseudo-random mean
    /// log-likelihood in `[-4, -0.5)` instead of an error.
    pub fn with_hashed_scores(mut self) -> Self {
        self.hashed_scores = true;
        self
    }

    pub fn with_score(mut self, input: &str, target: &str, mean: f64) -> Self {
        self.insert_score(input, target, SequenceScore::from_mean(mean));
        self
    }

    pub fn insert_score(&mut self, input: &str, target: &str, score: SequenceScore) {
        self.scores
            .insert((input.to_string(), target.to_string()), score);
    }

    pub fn with_next(mut self, input: &str, prefix: &[TokenId], id: TokenId) -> Self {
        self.insert_next(input, prefix, id);
        self
    }

    pub fn insert_next(&mut self, input: &str, prefix: &[TokenId], id: TokenId) {
        self.next.insert((input.to_string(), prefix.to_vec()), id);
    }

    /// Scripts the whole token sequence `ids` for `input`.
    pub fn insert_script(&mut self, input: &str, ids: &[TokenId]) {
        for i in 0..ids.len() {
            self.insert_next(input, &ids[..i], ids[i]);
        }
    }

    pub fn with_script(mut self, input: &str, ids: &[TokenId]) -> Self {
        self.insert_script(input, ids);
        self
    }

    pub fn from_file(file: TableFile) -> Self {
        let mut backend = TableBackend::new(file.seed);
        backend.hashed_scores = file.hashed_scores;
        for e in file.scores {
            backend.insert_score(&e.input, &e.target, SequenceScore::from_mean(e.score));
        }
        for e in file.next {
            backend.insert_next(&e.input, &e.prefix, e.id);
        }
        backend
    }

    fn rng(&self, parts: &[&[u8]]) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(stable_hash(self.seed, parts))
    }
}

impl Backend for TableBackend {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            supports_score: true,
            supports_generate: true,
            tokenizer_artifact: None,
            model_name: Some("table".into()),
        }
    }

    fn score(&self, input: &str, target: &str) -> Result<SequenceScore, BackendError> {
        if input.is_empty() || target.is_empty() {
            return Err(BackendError::InvalidRequest(
                "score needs a non-empty input and target".into(),
            ));
        }
        if let Some(s) = self.scores.get(&(input.to_string(), target.to_string())) {
            return Ok(*s);
        }
        if !self.hashed_scores {
            return Err(BackendError::MissingEntry(format!(
                "({input:?}, {target:?})"
            )));
        }
        let mean = -0.5
            - 3.5
                * self
                    .rng(&[input.as_bytes(), target.as_bytes()])
                    .gen::<f64>();
        let tokens = target.split_whitespace().count().max(1) as u32;
        Ok(SequenceScore {
            logprob_sum: mean * tokens as f64,
            tokens,
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
        if let Some(&id) = self.next.get(&(input.to_string(), prefix.to_vec())) {
            if allowed.contains(&id) {
                return Ok(TokenChoice { id, logprob: 0.0 });
            }
        }
        let prefix_bytes: Vec<u8> = prefix.iter().flat_map(|t| t.to_le_bytes()).collect();
        let idx = self
            .rng(&[input.as_bytes(), &prefix_bytes])
            .gen_range(0..allowed.len());
        Ok(TokenChoice {
            id: allowed[idx],
            logprob: -(allowed.len() as f64).ln(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_table_lookup() {
        let b = TableBackend::new(0).with_score("x", "y", -1.5);
        assert_eq!(b.score("x", "y").unwrap().mean(), -1.5);
        assert!(matches!(
            b.score("x", "z"),
            Err(BackendError::MissingEntry(_))
        ));
        assert!(matches!(
            b.score("", "z"),
            Err(BackendError::InvalidRequest(_))
        ));
    }

    #[test]
    fn hashed_scores_are_deterministic_and_finite() {
        let b = TableBackend::uniform(7);
        let s1 = b.score("the food", "food great").unwrap();
        let s2 = b.score("the food", "food great").unwrap();
        assert_eq!(s1, s2);
        assert!(s1.mean().is_finite() && s1.mean() < 0.0);
        let other = TableBackend::uniform(8)
            .score("the food", "food great")
            .unwrap();
        assert_ne!(s1, other);
    }

    #[test]
    fn singleton_allowed_is_forced() {
        let b = TableBackend::uniform(3);
        for k in [0, 5, 99] {
            assert_eq!(b.next_token("in", &[1, 2], &[k]).unwrap().id, k);
        }
    }

    #[test]
    fn empty_allowed_is_an_error() {
        let b = TableBackend::uniform(3);
        assert_eq!(
            b.next_token("in", &[], &[]),
            Err(BackendError::EmptyAllowed)
        );
    }

    #[test]
    fn seeded_fallback_reproducible() {
        let allowed: Vec<TokenId> = (0..50).collect();
        let run = |seed| {
            let b = TableBackend::uniform(seed);
            (0..20)
                .map(|i| b.next_token("input", &[i], &allowed).unwrap().id)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn table_entry_wins_over_fallback() {
        let allowed: Vec<TokenId> = (0..50).collect();
        for seed in 0..10 {
            let b = TableBackend::new(seed).with_next("in", &[4], 42);
            let choice = b.next_token("in", &[4], &allowed).unwrap();
            assert_eq!(choice.id, 42);
            assert_eq!(choice.logprob, 0.0);
        }
    }

    #[test]
    fn table_entry_outside_allowed_falls_back() {
        let b = TableBackend::new(0).with_next("in", &[], 42);
        let choice = b.next_token("in", &[], &[1, 2, 3]).unwrap();
        assert!([1, 2, 3].contains(&choice.id));
    }

    #[test]
    fn loads_table_file() {
        let file: TableFile = serde_json::from_str(
            r#"{"seed": 1, "scores": [{"input": "a", "target": "b", "score": -2.0}],
                "next": [{"input": "a", "prefix": [], "id": 3}]}"#,
        )
        .unwrap();
        let b = TableBackend::from_file(file);
        assert_eq!(b.score("a", "b").unwrap().mean(), -2.0);
        assert_eq!(b.next_token("a", &[], &[1, 3]).unwrap().id, 3);
    }
}

use serde::{Deserialize, Serialize};

use super::constraints::{allowed_next, step, ConstraintTables, DecoderState};
use super::tokenizer::{TokenId, Tokenizer};
use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::schema::{build_input, ElementOrder, TaskSpec};

/// Output of one constrained generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub text: String,
    pub ids: Vec<TokenId>,
    /// Mean log-probability of the emitted tokens.
    pub sequence_score: f64,
    /// Stopped at `max_tokens` before end-of-sequence.
    pub truncated: bool,
}

/// Greedy schema-constrained generation of one view.
pub fn constrained_generate(
    backend: &dyn Backend,
    tokenizer: &dyn Tokenizer,
    task: &TaskSpec,
    sentence: &str,
    order: &ElementOrder,
    task_prefix: Option<&str>,
    max_tokens: usize,
) -> Result<Generation> {
    let tables = ConstraintTables::build(sentence, task, tokenizer)?;
    let input = build_input(sentence, order, task_prefix);
    generate_with_tables(backend, tokenizer, &tables, &input, order, max_tokens)
}

/// Like [`constrained_generate`] with prebuilt tables and model input, so
/// several views of one sentence share the tables.
pub fn generate_with_tables(
    backend: &dyn Backend,
    tokenizer: &dyn Tokenizer,
    tables: &ConstraintTables,
    input: &str,
    order: &ElementOrder,
    max_tokens: usize,
) -> Result<Generation> {
    if max_tokens == 0 {
        return Err(Error::Invalid("max_tokens must be at least 1".into()));
    }
    let mut state = DecoderState::new();
    let mut logprob_sum = 0.0;
    while state.emitted().len() < max_tokens && !state.is_finished() {
        let allowed = allowed_next(&state, tables, order);
        let choice = backend.next_token(input, state.emitted(), &allowed)?;
        state = step(&state, choice.id, tables, order)?;
        logprob_sum += choice.logprob;
    }
    let ids = state.emitted().to_vec();
    let sequence_score = if ids.is_empty() {
        0.0
    } else {
        logprob_sum / ids.len() as f64
    };
    Ok(Generation {
        text: tokenizer.decode(&ids),
        ids,
        sequence_score,
        truncated: !state.is_finished(),
    })
}

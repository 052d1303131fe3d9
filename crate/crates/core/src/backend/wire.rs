//! Request and response bodies of the `/v1` HTTP protocol.

use serde::{Deserialize, Serialize};

use crate::decoding::TokenId;

pub const SCORE_PATH: &str = "/v1/score";
pub const NEXT_TOKEN_PATH: &str = "/v1/next_token";
pub const INFO_PATH: &str = "/v1/info";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub input: String,
    pub target: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub logprob_sum: f64,
    pub tokens: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NextTokenRequest {
    pub input: String,
    pub prefix_ids: Vec<TokenId>,
    pub allowed_ids: Vec<TokenId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NextTokenResponse {
    pub id: TokenId,
    pub logprob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoResponse {
    pub tokenizer_artifact: String,
    pub model_name: String,
}

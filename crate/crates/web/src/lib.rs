//! Browser bindings for the multi-view prompting engine.
//!
//! Every exported function takes a JSON request string and returns a JSON
//! response string. Failures come back as `{"error": "..."}` so the page
//! never has to catch exceptions.

use std::collections::BTreeMap;

use mvp_core::aggregate::{rank_select, vote, ViewPrediction};
use mvp_core::backend::{Backend, TableBackend};
use mvp_core::data::{DatasetExample, Split};
use mvp_core::decoding::{
    allowed_next, step, vocab_for, ConstraintTables, DecoderState, PieceVocab, Tokenizer,
};
use mvp_core::orders::{demarked_target, enumerate_orders};
use mvp_core::schema::{
    build_input, parse_target, serialize_target, ElementKind, ElementOrder, SentimentTuple, Task,
    TaskSpec,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Restaurant aspect categories, used when a request names none.
pub const DEFAULT_CATEGORIES: [&str; 12] = [
    "AMBIENCE#GENERAL",
    "DRINKS#PRICES",
    "DRINKS#QUALITY",
    "DRINKS#STYLE_OPTIONS",
    "FOOD#PRICES",
    "FOOD#QUALITY",
    "FOOD#STYLE_OPTIONS",
    "LOCATION#GENERAL",
    "RESTAURANT#GENERAL",
    "RESTAURANT#MISCELLANEOUS",
    "RESTAURANT#PRICES",
    "SERVICE#GENERAL",
];

const TRACE_MAX_TOKENS: usize = 256;
const TRACE_ALLOWED_SHOWN: usize = 12;

type Reply<T> = Result<T, String>;

fn respond<Req: DeserializeOwned, Resp: Serialize>(
    request: &str,
    handler: impl FnOnce(Req) -> Reply<Resp>,
) -> String {
    let result = serde_json::from_str::<Req>(request)
        .map_err(|e| format!("bad request: {e}"))
        .and_then(handler);
    match result {
        Ok(resp) => serde_json::to_string(&resp).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e),
    }
}

fn error_json(message: &str) -> String {
    json!({ "error": message }).to_string()
}

fn task_spec(task: &str, categories: Option<Vec<String>>) -> Reply<TaskSpec> {
    let task: Task = task.parse().map_err(|e: mvp_core::Error| e.to_string())?;
    let categories = if task.has(ElementKind::Category) {
        categories.unwrap_or_else(|| DEFAULT_CATEGORIES.iter().map(|c| c.to_string()).collect())
    } else {
        Vec::new()
    };
    TaskSpec::new(task, "Demo", categories).map_err(|e| e.to_string())
}

fn parse_order(order: &str, task: Task) -> Reply<ElementOrder> {
    let order: ElementOrder = order.parse().map_err(|e: mvp_core::Error| e.to_string())?;
    order.check_task(task).map_err(|e| e.to_string())?;
    Ok(order)
}

#[derive(Deserialize)]
pub struct RenderRequest {
    pub task: String,
    pub sentence: String,
    pub tuples: Vec<SentimentTuple>,
}

#[derive(Debug, Serialize)]
pub struct RenderedView {
    pub order: String,
    pub input: String,
    pub target: String,
    /// The target as scored during order selection, markers blanked.
    pub scored_target: String,
}

#[derive(Debug, Serialize)]
pub struct RenderResponse {
    pub task: String,
    pub views: Vec<RenderedView>,
}

pub fn render(req: RenderRequest) -> Reply<RenderResponse> {
    let spec = task_spec(&req.task, None)?;
    if let Some(t) = req.tuples.iter().find(|t| !t.conforms_to(spec.elements())) {
        return Err(format!("tuple {t} does not fit {}", spec.task));
    }
    let example = DatasetExample {
        sentence: req.sentence.clone(),
        gold: req.tuples,
        task: spec.clone(),
        split: Split::Test,
    };
    let views = enumerate_orders(spec.task)
        .into_iter()
        .map(|order| {
            Ok(RenderedView {
                order: order.marker_string(),
                input: build_input(&req.sentence, &order, None),
                target: serialize_target(&example.gold, &order).map_err(|e| e.to_string())?,
                scored_target: demarked_target(&example, &order).map_err(|e| e.to_string())?,
            })
        })
        .collect::<Reply<Vec<_>>>()?;
    Ok(RenderResponse {
        task: spec.task.to_string(),
        views,
    })
}

/// Renders a tuple list as the target of every element order of its task.
#[wasm_bindgen]
pub fn render_views(request: &str) -> String {
    respond(request, render)
}

#[derive(Deserialize)]
pub struct TraceRequest {
    pub task: String,
    pub sentence: String,
    pub order: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub categories: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
pub struct TraceStep {
    pub state: String,
    pub allowed: usize,
    pub allowed_sample: Vec<String>,
    pub chosen: String,
}

#[derive(Debug, Serialize)]
pub struct TraceResponse {
    pub input: String,
    pub steps: Vec<TraceStep>,
    pub text: String,
    pub truncated: bool,
    pub tuples: Vec<SentimentTuple>,
}

fn piece(vocab: &PieceVocab, id: u32) -> String {
    vocab.piece(id).unwrap_or("?").to_string()
}

pub fn trace(req: TraceRequest) -> Reply<TraceResponse> {
    let spec = task_spec(&req.task, req.categories)?;
    let order = parse_order(&req.order, spec.task)?;
    if req.sentence.trim().is_empty() {
        return Err("sentence is empty".into());
    }
    let vocab = vocab_for([req.sentence.as_str()], &[&spec]);
    let tables =
        ConstraintTables::build(&req.sentence, &spec, &vocab).map_err(|e| e.to_string())?;
    let input = build_input(&req.sentence, &order, None);
    let backend = TableBackend::uniform(req.seed);

    let mut state = DecoderState::new();
    let mut steps = Vec::new();
    while !state.is_finished() && state.emitted().len() < TRACE_MAX_TOKENS {
        let allowed = allowed_next(&state, &tables, &order);
        let choice = backend
            .next_token(&input, state.emitted(), &allowed)
            .map_err(|e| e.to_string())?;
        steps.push(TraceStep {
            state: state.to_string(),
            allowed: allowed.len(),
            allowed_sample: allowed
                .iter()
                .take(TRACE_ALLOWED_SHOWN)
                .map(|&id| piece(&vocab, id))
                .collect(),
            chosen: piece(&vocab, choice.id),
        });
        state = step(&state, choice.id, &tables, &order).map_err(|e| e.to_string())?;
    }
    let text = vocab.decode(state.emitted());
    let (tuples, _) = parse_target(&text, &spec);
    Ok(TraceResponse {
        input,
        steps,
        text,
        truncated: !state.is_finished(),
        tuples,
    })
}

/// Runs one constrained generation with a uniformly random backend and
/// reports the automaton state and allowed set at every step.
#[wasm_bindgen]
pub fn decode_trace(request: &str) -> String {
    respond(request, trace)
}

#[derive(Deserialize)]
pub struct ViewInput {
    pub order: String,
    pub text: String,
    #[serde(default)]
    pub score: Option<f64>,
}

#[derive(Deserialize)]
pub struct VoteRequest {
    pub task: String,
    pub views: Vec<ViewInput>,
    #[serde(default)]
    pub categories: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
pub struct ParsedView {
    pub order: String,
    pub tuples: Vec<SentimentTuple>,
    pub skipped: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Tally {
    pub tuple: SentimentTuple,
    pub votes: usize,
    pub kept: bool,
}

#[derive(Debug, Serialize)]
pub struct VoteResponse {
    pub views: Vec<ParsedView>,
    /// Votes a tuple needs to survive.
    pub threshold: usize,
    pub tally: Vec<Tally>,
    pub voted: Vec<SentimentTuple>,
    /// Tuples of the best-scoring view, when every view has a score.
    pub ranked: Option<Vec<SentimentTuple>>,
}

pub fn explore(req: VoteRequest) -> Reply<VoteResponse> {
    let spec = task_spec(&req.task, req.categories)?;
    if req.views.is_empty() {
        return Err("no views given".into());
    }
    let mut parsed = Vec::new();
    let mut predictions = Vec::new();
    for view in &req.views {
        let order = parse_order(&view.order, spec.task)?;
        let (tuples, diag) = parse_target(&view.text, &spec);
        predictions.push(ViewPrediction::new(
            order.clone(),
            tuples.iter().cloned(),
            view.score.unwrap_or(f64::NAN),
        ));
        parsed.push(ParsedView {
            order: order.marker_string(),
            tuples,
            skipped: diag
                .skipped
                .iter()
                .map(|s| format!("{}: {}", s.segment, s.reason))
                .collect(),
        });
    }
    let m = predictions.len();
    let threshold = m.div_ceil(2);
    let voted = vote(&predictions);
    let mut counts: BTreeMap<&SentimentTuple, usize> = BTreeMap::new();
    for p in &predictions {
        for t in &p.tuples {
            *counts.entry(t).or_default() += 1;
        }
    }
    let tally = counts
        .into_iter()
        .map(|(t, votes)| Tally {
            tuple: t.clone(),
            votes,
            kept: voted.contains(t),
        })
        .collect();
    let ranked = req
        .views
        .iter()
        .all(|v| v.score.is_some())
        .then(|| rank_select(&predictions).into_iter().collect());
    Ok(VoteResponse {
        views: parsed,
        threshold,
        tally,
        voted: voted.into_iter().collect(),
        ranked,
    })
}

/// Parses the target text of several views and shows how voting combines
/// them.
#[wasm_bindgen]
pub fn vote_views(request: &str) -> String {
    respond(request, explore)
}

/// Element orders of a task, in enumeration order.
#[wasm_bindgen]
pub fn task_orders(task: &str) -> String {
    match task.parse::<Task>() {
        Ok(t) => serde_json::to_string(
            &enumerate_orders(t)
                .iter()
                .map(ElementOrder::marker_string)
                .collect::<Vec<_>>(),
        )
        .unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

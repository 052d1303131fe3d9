//! Multi-view element-order prompting for aspect sentiment tuple prediction.
//!
//! The crate is model-agnostic: a [`backend::Backend`] supplies sequence
//! scores and constrained next-token choices, everything else (order
//! selection, schema-constrained decoding, view aggregation, datasets and
//! evaluation) lives here.

pub mod aggregate;
pub mod backend;
pub mod config;
pub mod data;
pub mod decoding;
pub mod error;
pub mod eval;
pub mod orders;
pub mod schema;

pub use error::{Error, Result};
pub use schema::{
    build_input, parse_target, serialize_target, ElementKind, ElementOrder, ParseDiagnostics,
    Polarity, SentimentTuple, Task, TaskSpec,
};

//! Clients for the external model services every neural stage talks to, plus
//! in-process mocks that stand in for them offline.
//!
//! All services speak JSON over HTTP:
//!
//! | service    | request                                   | response                          |
//! |------------|-------------------------------------------|-----------------------------------|
//! | chat       | `{model, messages, temperature, top_p, max_tokens, do_sample}` | `{choices: [{message: {content}}]}` |
//! | embedding  | `{model, input: [text]}`                  | `{data: [{embedding: [f32]}]}`    |
//! | list score | `{model, query, documents: [text]}`       | `{scores: [f64]}`                 |
//! | pair score | `{model, pairs: [{query, document}]}`     | `{scores: [f64]}`                 |

mod http;
pub mod mock;
pub mod wire;

pub use http::{HttpChat, HttpEmbedder, HttpListScorer, HttpPairScorer, HttpService, RetryPolicy};
pub use wire::{ChatMessage, ChatRequest, DecodingConfig};

use crate::error::ServiceError;
use crate::model::Query;

/// A document as handed to a scoring service.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringDoc {
    pub doc_id: String,
    pub text: String,
}

pub trait ChatClient: Send + Sync {
    /// Returns the assistant message content.
    fn complete(&self, request: &ChatRequest) -> Result<String, ServiceError>;
}

pub trait Embedder: Send + Sync {
    /// One vector per input text, order-aligned, all of the same dimension.
    fn embed(&self, model: &str, texts: &[String]) -> Result<Vec<Vec<f32>>, ServiceError>;
}

/// Scores a whole candidate list against one query (late interaction).
pub trait ListScorer: Send + Sync {
    fn score_list(
        &self,
        model: &str,
        query: &Query,
        docs: &[ScoringDoc],
    ) -> Result<Vec<f64>, ServiceError>;
}

/// Scores (query, document) pairs jointly (cross-encoder).
pub trait PairScorer: Send + Sync {
    fn score_pairs(
        &self,
        model: &str,
        query: &Query,
        docs: &[ScoringDoc],
    ) -> Result<Vec<f64>, ServiceError>;
}

pub(crate) fn check_aligned<T>(got: &[T], expected: usize) -> Result<(), ServiceError> {
    if got.len() != expected {
        return Err(ServiceError::Protocol(format!(
            "expected {expected} results, service returned {}",
            got.len()
        )));
    }
    Ok(())
}

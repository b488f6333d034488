use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::wire::{
    ChatRequest, ChatResponse, EmbeddingRequest, EmbeddingResponse, ListScoreRequest, Pair,
    PairScoreRequest, ScoresResponse,
};
use super::{check_aligned, ChatClient, Embedder, ListScorer, PairScorer, ScoringDoc};
use crate::error::ServiceError;
use crate::model::Query;

/// Transport failures and 5xx responses are retried with exponential backoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(250),
        }
    }
}

/// A JSON POST endpoint with optional bearer credential.
#[derive(Debug, Clone)]
pub struct HttpService {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    retry: RetryPolicy,
}

enum Failure {
    Retryable(String),
    Fatal(ServiceError),
}

impl HttpService {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Result<Self, ServiceError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| ServiceError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: endpoint.into(),
            api_key,
            retry: RetryPolicy::default(),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn attempt<Req: Serialize, Resp: DeserializeOwned>(&self, body: &Req) -> Result<Resp, Failure> {
        let mut req = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Failure::Retryable(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() {
            return Err(Failure::Retryable(format!("{} returned {status}", self.endpoint)));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(Failure::Fatal(ServiceError::Protocol(format!(
                "{} returned {status}: {text}",
                self.endpoint
            ))));
        }
        resp.json::<Resp>()
            .map_err(|e| Failure::Fatal(ServiceError::Protocol(e.to_string())))
    }

    pub fn post_json<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        body: &Req,
    ) -> Result<Resp, ServiceError> {
        let mut delay = self.retry.base_delay;
        let mut last = String::new();
        for attempt in 1..=self.retry.attempts.max(1) {
            match self.attempt(body) {
                Ok(r) => return Ok(r),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(msg)) => {
                    tracing::warn!(endpoint = %self.endpoint, attempt, error = %msg, "request failed");
                    last = msg;
                    if attempt < self.retry.attempts {
                        thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(ServiceError::Transport(last))
    }
}

pub struct HttpChat(pub HttpService);

impl ChatClient for HttpChat {
    fn complete(&self, request: &ChatRequest) -> Result<String, ServiceError> {
        let resp: ChatResponse = self.0.post_json(request)?;
        resp.choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ServiceError::Protocol("response has no choices".into()))
    }
}

pub struct HttpEmbedder(pub HttpService);

impl Embedder for HttpEmbedder {
    fn embed(&self, model: &str, texts: &[String]) -> Result<Vec<Vec<f32>>, ServiceError> {
        let resp: EmbeddingResponse = self.0.post_json(&EmbeddingRequest { model, input: texts })?;
        check_aligned(&resp.data, texts.len())?;
        let vectors: Vec<Vec<f32>> = resp.data.into_iter().map(|d| d.embedding).collect();
        if let Some(first) = vectors.first() {
            if vectors.iter().any(|v| v.len() != first.len()) {
                return Err(ServiceError::Protocol("embedding dimensions differ".into()));
            }
        }
        Ok(vectors)
    }
}

pub struct HttpListScorer(pub HttpService);

impl ListScorer for HttpListScorer {
    fn score_list(
        &self,
        model: &str,
        query: &Query,
        docs: &[ScoringDoc],
    ) -> Result<Vec<f64>, ServiceError> {
        let body = ListScoreRequest {
            model,
            query: &query.text,
            documents: docs.iter().map(|d| d.text.as_str()).collect(),
        };
        let resp: ScoresResponse = self.0.post_json(&body)?;
        check_aligned(&resp.scores, docs.len())?;
        Ok(resp.scores)
    }
}

pub struct HttpPairScorer(pub HttpService);

impl PairScorer for HttpPairScorer {
    fn score_pairs(
        &self,
        model: &str,
        query: &Query,
        docs: &[ScoringDoc],
    ) -> Result<Vec<f64>, ServiceError> {
        let body = PairScoreRequest {
            model,
            pairs: docs
                .iter()
                .map(|d| Pair {
                    query: &query.text,
                    document: &d.text,
                })
                .collect(),
        };
        let resp: ScoresResponse = self.0.post_json(&body)?;
        check_aligned(&resp.scores, docs.len())?;
        Ok(resp.scores)
    }
}

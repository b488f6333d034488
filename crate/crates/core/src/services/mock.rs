//! Deterministic in-process stand-ins for the model services. They let the
//! whole cascade run offline: hash embeddings for the dense stage, an oracle
//! or lexical pair scorer for the cross-encoder stage, and scripted chat
//! clients for rewriting and listwise ranking.

use std::collections::{BTreeSet, HashMap};

use super::wire::ChatRequest;
use super::{ChatClient, Embedder, ListScorer, PairScorer, ScoringDoc};
use crate::dense::cosine;
use crate::error::ServiceError;
use crate::model::{Qrels, Query};

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Signed feature hashing of lowercase alphanumeric tokens.
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    pub dim: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self { dim: 256 }
    }
}

impl HashEmbedder {
    pub fn vector(&self, text: &str) -> Vec<f32> {
        let mut v = vec![0.0f32; self.dim.max(1)];
        for tok in text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            let h = fnv1a(tok.to_lowercase().as_bytes());
            let slot = (h % v.len() as u64) as usize;
            let sign = if (h >> 63) == 0 { 1.0 } else { -1.0 };
            v[slot] += sign;
        }
        v
    }
}

impl Embedder for HashEmbedder {
    fn embed(&self, _model: &str, texts: &[String]) -> Result<Vec<Vec<f32>>, ServiceError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

/// Cosine between hash embeddings of the query and each document.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashListScorer(pub HashEmbedder);

impl ListScorer for HashListScorer {
    fn score_list(
        &self,
        _model: &str,
        query: &Query,
        docs: &[ScoringDoc],
    ) -> Result<Vec<f64>, ServiceError> {
        let q = self.0.vector(&query.text);
        Ok(docs.iter().map(|d| cosine(&q, &self.0.vector(&d.text))).collect())
    }
}

impl PairScorer for HashListScorer {
    fn score_pairs(
        &self,
        model: &str,
        query: &Query,
        docs: &[ScoringDoc],
    ) -> Result<Vec<f64>, ServiceError> {
        self.score_list(model, query, docs)
    }
}

/// Scores each document by its relevance grade for the query.
#[derive(Debug, Clone)]
pub struct OraclePairScorer {
    pub qrels: Qrels,
}

impl PairScorer for OraclePairScorer {
    fn score_pairs(
        &self,
        _model: &str,
        query: &Query,
        docs: &[ScoringDoc],
    ) -> Result<Vec<f64>, ServiceError> {
        Ok(docs
            .iter()
            .map(|d| f64::from(self.qrels.grade(&query.query_id, &d.doc_id)))
            .collect())
    }
}

/// Returns the user message unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoChat;

impl ChatClient for EchoChat {
    fn complete(&self, request: &ChatRequest) -> Result<String, ServiceError> {
        Ok(request.user_text().unwrap_or_default().to_string())
    }
}

/// Always answers with the same text.
#[derive(Debug, Clone)]
pub struct FixedChat(pub String);

impl ChatClient for FixedChat {
    fn complete(&self, _request: &ChatRequest) -> Result<String, ServiceError> {
        Ok(self.0.clone())
    }
}

/// Always fails with a transport error.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnreachableChat;

impl ChatClient for UnreachableChat {
    fn complete(&self, _request: &ChatRequest) -> Result<String, ServiceError> {
        Err(ServiceError::Transport("service unreachable".into()))
    }
}

#[derive(Debug, Clone)]
pub enum ListwiseBehavior {
    /// Echo the shown order.
    Identity,
    /// Shown order reversed.
    Reverse,
    /// Relevant ids first (in shown order), then the rest. Keyed by query text.
    Oracle(HashMap<String, BTreeSet<String>>),
}

/// Chat client that reads a listwise prompt and answers `[id] > [id] > ...`.
#[derive(Debug, Clone)]
pub struct ListwiseMock {
    pub behavior: ListwiseBehavior,
}

impl ListwiseMock {
    pub fn identity() -> Self {
        Self {
            behavior: ListwiseBehavior::Identity,
        }
    }

    pub fn reverse() -> Self {
        Self {
            behavior: ListwiseBehavior::Reverse,
        }
    }

    pub fn oracle(queries: &[Query], qrels: &Qrels) -> Self {
        let map = queries
            .iter()
            .map(|q| {
                let rel = qrels
                    .relevant(&q.query_id)
                    .into_iter()
                    .map(String::from)
                    .collect();
                (q.text.clone(), rel)
            })
            .collect();
        Self {
            behavior: ListwiseBehavior::Oracle(map),
        }
    }
}

/// Pulls the query text and the bracketed candidate ids out of a rendered
/// listwise prompt.
pub(crate) fn read_listwise_prompt(prompt: &str) -> Option<(&str, Vec<&str>)> {
    let after_query = prompt.split_once("\nQuery: ")?.1;
    let (query, rest) = after_query.split_once("\n\nCandidates:\n")?;
    let block = rest.split_once("\n\nInstructions:")?.0;
    let ids = block
        .lines()
        .filter_map(|l| l.strip_prefix('['))
        .filter_map(|l| l.split_once(']').map(|(id, _)| id))
        .collect();
    Some((query, ids))
}

impl ChatClient for ListwiseMock {
    fn complete(&self, request: &ChatRequest) -> Result<String, ServiceError> {
        let prompt = request.user_text().unwrap_or_default();
        let (query, mut ids) = read_listwise_prompt(prompt)
            .ok_or_else(|| ServiceError::Protocol("not a listwise prompt".into()))?;
        match &self.behavior {
            ListwiseBehavior::Identity => {}
            ListwiseBehavior::Reverse => ids.reverse(),
            ListwiseBehavior::Oracle(map) => {
                if let Some(rel) = map.get(query) {
                    let (mut first, rest): (Vec<&str>, Vec<&str>) =
                        ids.into_iter().partition(|id| rel.contains(*id));
                    first.extend(rest);
                    ids = first;
                }
            }
        }
        Ok(ids
            .iter()
            .map(|id| format!("[{id}]"))
            .collect::<Vec<_>>()
            .join(" > "))
    }
}

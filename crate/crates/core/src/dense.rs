//! Stage 2: re-rank the sparse candidate pool with several dense scorers and
//! fuse their rankings with Reciprocal Rank Fusion.
//!
//! Re-ranking only permutes the pool it is given, so recall at any depth
//! covering the pool is exactly the sparse stage's recall.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ServiceError};
use crate::model::{truncate_snippet, Corpus, Query, RankedList};
use crate::services::{Embedder, ListScorer, ScoringDoc};

pub const RRF_TAG: &str = "rrf";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrfConfig {
    pub k: f64,
}

impl Default for RrfConfig {
    fn default() -> Self {
        Self { k: 60.0 }
    }
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

/// Bi-encoder: cosine between the prefixed query embedding and each prefixed
/// document embedding.
#[derive(Clone)]
pub struct EmbeddingScorer {
    pub model: String,
    pub query_prefix: String,
    pub doc_prefix: String,
    pub embedder: Arc<dyn Embedder>,
}

/// Late-interaction scorer; the service returns one score per candidate.
#[derive(Clone)]
pub struct LateInteractionScorer {
    pub model: String,
    pub scorer: Arc<dyn ListScorer>,
}

#[derive(Clone)]
pub enum DenseScorer {
    Embedding(EmbeddingScorer),
    List(LateInteractionScorer),
}

impl DenseScorer {
    pub fn model(&self) -> &str {
        match self {
            DenseScorer::Embedding(e) => &e.model,
            DenseScorer::List(l) => &l.model,
        }
    }

    /// Run tag for this scorer's output.
    pub fn tag(&self) -> String {
        format!("dense-{}", self.model())
    }

    pub fn score(&self, query: &Query, docs: &[ScoringDoc]) -> Result<Vec<f64>, ServiceError> {
        let scores = match self {
            DenseScorer::Embedding(e) => {
                let mut texts = Vec::with_capacity(docs.len() + 1);
                texts.push(format!("{}{}", e.query_prefix, query.text));
                texts.extend(docs.iter().map(|d| format!("{}{}", e.doc_prefix, d.text)));
                let vectors = e.embedder.embed(&e.model, &texts)?;
                crate::services::check_aligned(&vectors, texts.len())?;
                let dim = vectors[0].len();
                if vectors.iter().any(|v| v.len() != dim) {
                    return Err(ServiceError::Protocol("embedding dimensions differ".into()));
                }
                vectors[1..].iter().map(|v| cosine(&vectors[0], v)).collect()
            }
            DenseScorer::List(l) => {
                let s = l.scorer.score_list(&l.model, query, docs)?;
                crate::services::check_aligned(&s, docs.len())?;
                s
            }
        };
        if scores.iter().any(|s| s.is_nan()) {
            return Err(ServiceError::Protocol("scorer returned NaN".into()));
        }
        Ok(scores)
    }
}

/// Scoring payloads for a ranked list: title + body cut to `text_chars`.
pub(crate) fn scoring_docs(
    list: &RankedList,
    corpus: &Corpus,
    text_chars: usize,
) -> Result<Vec<ScoringDoc>> {
    list.entries
        .iter()
        .map(|e| {
            let doc = corpus.lookup(&e.doc_id)?;
            Ok(ScoringDoc {
                doc_id: e.doc_id.clone(),
                text: truncate_snippet(&doc.full_text(), text_chars).to_string(),
            })
        })
        .collect()
}

/// Reorders `candidates` by scorer similarity, descending; ties by doc id.
pub fn dense_rerank(
    query: &Query,
    candidates: &RankedList,
    corpus: &Corpus,
    scorer: &DenseScorer,
    text_chars: usize,
) -> Result<RankedList> {
    if candidates.is_empty() {
        return Ok(RankedList::empty(&query.query_id, scorer.tag()));
    }
    let docs = scoring_docs(candidates, corpus, text_chars)?;
    let scores = scorer.score(query, &docs).map_err(|source| Error::Stage {
        stage: "dense",
        query_id: query.query_id.clone(),
        source,
    })?;
    let scored = docs.into_iter().map(|d| d.doc_id).zip(scores).collect();
    Ok(RankedList::from_scores(&query.query_id, scorer.tag(), scored))
}

/// Reciprocal Rank Fusion: `score(d) = Σ_lists 1/(k + rank(d))` over the lists
/// containing `d`. Each document's contributions are summed in ascending rank
/// order, so the result does not depend on the order the lists are given in.
pub fn rrf_fuse(lists: &[RankedList], cfg: RrfConfig) -> Result<RankedList> {
    let first = lists
        .first()
        .ok_or_else(|| Error::invalid("rrf needs at least one list"))?;
    if !(cfg.k > 0.0) {
        return Err(Error::invalid("rrf k must be > 0"));
    }
    let mut ranks: HashMap<&str, Vec<usize>> = HashMap::new();
    for list in lists {
        if list.query_id != first.query_id {
            return Err(Error::QueryMismatch {
                expected: first.query_id.clone(),
                found: list.query_id.clone(),
            });
        }
        for e in &list.entries {
            ranks.entry(e.doc_id.as_str()).or_default().push(e.rank);
        }
    }
    let scored = ranks
        .into_iter()
        .map(|(doc, mut rs)| {
            rs.sort_unstable();
            let s: f64 = rs.iter().map(|&r| 1.0 / (cfg.k + r as f64)).sum();
            (doc.to_string(), s)
        })
        .collect();
    Ok(RankedList::from_scores(&first.query_id, RRF_TAG, scored))
}

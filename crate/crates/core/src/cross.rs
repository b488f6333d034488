//! Stage 3: union pooling of the sparse and fused lists, then pairwise
//! (cross-encoder) scoring of the whole pool.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{truncate_snippet, Corpus, Query, RankedList};
use crate::services::{PairScorer, ScoringDoc};

pub const STAGE_TAG: &str = "cross";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoolConfig {
    pub sparse_take: usize,
    pub fused_take: usize,
    /// Output depth K_ce.
    pub output_depth: usize,
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self {
            sparse_take: 100,
            fused_take: 100,
            output_depth: 50,
        }
    }
}

impl PoolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sparse_take == 0 || self.fused_take == 0 || self.output_depth == 0 {
            return Err(Error::invalid("pool sizes and output depth must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolSource {
    SparseOnly,
    FusedOnly,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub doc_id: String,
    pub source: PoolSource,
}

/// Candidate set in a fixed pre-order: fused entries first, then sparse-only
/// entries in sparse order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridPool {
    pub query_id: String,
    pub entries: Vec<PoolEntry>,
}

impl HybridPool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, source: PoolSource) -> usize {
        self.entries.iter().filter(|e| e.source == source).count()
    }
}

pub fn build_hybrid_pool(
    sparse: &RankedList,
    fused: &RankedList,
    cfg: &PoolConfig,
) -> Result<HybridPool> {
    if sparse.query_id != fused.query_id {
        return Err(Error::QueryMismatch {
            expected: sparse.query_id.clone(),
            found: fused.query_id.clone(),
        });
    }
    let sparse_top: Vec<&str> = sparse.doc_ids().take(cfg.sparse_take).collect();
    let mut in_sparse: HashMap<&str, bool> = sparse_top.iter().map(|d| (*d, false)).collect();
    let mut entries = Vec::with_capacity(cfg.sparse_take + cfg.fused_take);
    for doc in fused.doc_ids().take(cfg.fused_take) {
        let source = match in_sparse.get_mut(doc) {
            Some(used) => {
                *used = true;
                PoolSource::Both
            }
            None => PoolSource::FusedOnly,
        };
        entries.push(PoolEntry {
            doc_id: doc.to_string(),
            source,
        });
    }
    for doc in sparse_top {
        if !in_sparse[doc] {
            entries.push(PoolEntry {
                doc_id: doc.to_string(),
                source: PoolSource::SparseOnly,
            });
        }
    }
    Ok(HybridPool {
        query_id: sparse.query_id.clone(),
        entries,
    })
}

#[derive(Clone)]
pub struct CrossEncoder {
    pub model: String,
    pub scorer: Arc<dyn PairScorer>,
    pub batch_size: usize,
    /// Character budget for title + body.
    pub text_chars: usize,
}

/// Scores every pool document against the query, sorts descending (doc id
/// on ties) and keeps the top `output_depth`.
pub fn cross_rerank(
    query: &Query,
    pool: &HybridPool,
    corpus: &Corpus,
    encoder: &CrossEncoder,
    output_depth: usize,
) -> Result<RankedList> {
    if pool.is_empty() {
        return Ok(RankedList::empty(&query.query_id, STAGE_TAG));
    }
    let docs = pool
        .entries
        .iter()
        .map(|e| {
            let d = corpus.lookup(&e.doc_id)?;
            Ok(ScoringDoc {
                doc_id: e.doc_id.clone(),
                text: truncate_snippet(&d.full_text(), encoder.text_chars).to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let stage_err = |source| Error::Stage {
        stage: "cross",
        query_id: query.query_id.clone(),
        source,
    };
    let mut scores = Vec::with_capacity(docs.len());
    for batch in docs.chunks(encoder.batch_size.max(1)) {
        let s = encoder
            .scorer
            .score_pairs(&encoder.model, query, batch)
            .map_err(stage_err)?;
        crate::services::check_aligned(&s, batch.len()).map_err(stage_err)?;
        if s.iter().any(|v| v.is_nan()) {
            return Err(stage_err(crate::error::ServiceError::Protocol(
                "pair scorer returned NaN".into(),
            )));
        }
        scores.extend(s);
    }
    let scored = docs.into_iter().map(|d| d.doc_id).zip(scores).collect();
    let mut list = RankedList::from_scores(&query.query_id, STAGE_TAG, scored);
    list.entries.truncate(output_depth);
    Ok(list)
}

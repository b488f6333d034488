//! RM3 pseudo-relevance feedback.
//!
//! The relevance model is estimated from the top feedback documents of a
//! plain BM25 pass:
//!
//! ```text
//! P(t|R) = Σ_d  w_d · tf(t,d) / |d|,     w_d = score(d) / Σ_d' score(d')
//! ```
//!
//! The strongest `expansion_terms` feedback terms are kept and renormalized,
//! then interpolated with the maximum-likelihood query model:
//! `λ·P(t|R) + (1-λ)·P(t|Q)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::bm25::{bm25_retrieve, query_term_counts, retrieve_weighted, Bm25Params};
use super::index::InvertedIndex;
use crate::error::{Error, Result};
use crate::model::{Query, RankedList};

pub const STAGE_TAG: &str = "bm25-rm3";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rm3Config {
    pub feedback_docs: usize,
    pub expansion_terms: usize,
    pub lambda: f64,
}

impl Default for Rm3Config {
    fn default() -> Self {
        Self {
            feedback_docs: 3,
            expansion_terms: 10,
            lambda: 0.6,
        }
    }
}

impl Rm3Config {
    pub fn validate(&self) -> Result<()> {
        if self.feedback_docs == 0 || self.expansion_terms == 0 {
            return Err(Error::invalid(
                "rm3 feedback_docs and expansion_terms must be >= 1",
            ));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!(
                "rm3 lambda must be in [0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionTerm {
    pub term: String,
    /// Interpolated probability `λ·P(t|R) + (1-λ)·P(t|Q)`.
    pub weight: f64,
    /// Renormalized `P(t|R)`; 0 for original terms outside the kept set.
    pub feedback_prob: f64,
    /// Occurrences in the original query.
    pub query_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpandedQuery {
    pub query_id: String,
    /// Original terms in query order, then feedback-only terms by descending `P(t|R)`.
    pub terms: Vec<ExpansionTerm>,
    pub query_length: f64,
    pub lambda: f64,
}

impl ExpandedQuery {
    /// Weights scaled by query length, so original terms carry their raw counts
    /// at `λ = 0` and the ranking coincides with plain BM25.
    pub fn retrieval_weights(&self) -> Vec<(String, f64)> {
        self.terms
            .iter()
            .map(|t| {
                let w = self.lambda * self.query_length * t.feedback_prob
                    + (1.0 - self.lambda) * t.query_count;
                (t.term.clone(), w)
            })
            .collect()
    }
}

/// Relevance model over the given feedback documents, before truncation.
/// Returned in descending probability, ties by term.
pub fn relevance_model(index: &InvertedIndex, feedback: &RankedList) -> Vec<(String, f64)> {
    let mass: f64 = feedback.entries.iter().map(|e| e.score).sum();
    let mut probs: HashMap<u32, f64> = HashMap::new();
    for e in &feedback.entries {
        let Some(d) = index.internal_id(&e.doc_id) else {
            continue;
        };
        let dl = f64::from(index.doc_length(d));
        if dl == 0.0 {
            continue;
        }
        let doc_weight = if mass > 0.0 {
            e.score / mass
        } else {
            1.0 / feedback.len() as f64
        };
        for &(t, tf) in index.doc_terms(d) {
            *probs.entry(t).or_default() += doc_weight * f64::from(tf) / dl;
        }
    }
    let mut out: Vec<(String, f64)> = probs
        .into_iter()
        .map(|(t, p)| (index.term(t).to_string(), p))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

pub fn rm3_expand(
    index: &InvertedIndex,
    query: &Query,
    params: Bm25Params,
    cfg: Rm3Config,
) -> Result<ExpandedQuery> {
    cfg.validate()?;
    let original = query_term_counts(index, &query.text);
    let query_length: f64 = original.iter().map(|(_, c)| c).sum();
    let mut terms: Vec<ExpansionTerm> = original
        .iter()
        .map(|(t, c)| ExpansionTerm {
            term: t.clone(),
            weight: c / query_length,
            feedback_prob: 0.0,
            query_count: *c,
        })
        .collect();
    let unchanged = |terms| ExpandedQuery {
        query_id: query.query_id.clone(),
        terms,
        query_length,
        lambda: 0.0,
    };
    if original.is_empty() {
        return Ok(unchanged(terms));
    }
    let feedback = bm25_retrieve(index, query, params, cfg.feedback_docs)?;
    if feedback.is_empty() {
        return Ok(unchanged(terms));
    }

    let mut model = relevance_model(index, &feedback);
    model.truncate(cfg.expansion_terms);
    let kept_mass: f64 = model.iter().map(|(_, p)| p).sum();
    let lambda = cfg.lambda;
    for (term, p) in model {
        let p = if kept_mass > 0.0 { p / kept_mass } else { 0.0 };
        match terms.iter_mut().find(|t| t.term == term) {
            Some(t) => t.feedback_prob = p,
            None => terms.push(ExpansionTerm {
                term,
                weight: 0.0,
                feedback_prob: p,
                query_count: 0.0,
            }),
        }
    }
    for t in &mut terms {
        t.weight = lambda * t.feedback_prob + (1.0 - lambda) * (t.query_count / query_length);
    }
    Ok(ExpandedQuery {
        query_id: query.query_id.clone(),
        terms,
        query_length,
        lambda,
    })
}

/// Expands the query and re-retrieves with weighted BM25.
pub fn rm3_retrieve(
    index: &InvertedIndex,
    query: &Query,
    params: Bm25Params,
    cfg: Rm3Config,
    depth: usize,
) -> Result<RankedList> {
    let expanded = rm3_expand(index, query, params, cfg)?;
    let list = retrieve_weighted(
        index,
        &query.query_id,
        &expanded.retrieval_weights(),
        params,
        depth,
    )?;
    Ok(list.with_tag(STAGE_TAG))
}

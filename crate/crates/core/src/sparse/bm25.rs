use serde::{Deserialize, Serialize};

use super::index::InvertedIndex;
use crate::error::{Error, Result};
use crate::model::{Query, RankedList};

pub const STAGE_TAG: &str = "bm25";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let p = Self { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(Error::invalid(format!("k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::invalid(format!("b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`, positive whenever `df <= N`.
pub fn idf(doc_count: usize, df: usize) -> f64 {
    let (n, df) = (doc_count as f64, df as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// Saturated tf component: `tf (k1 + 1) / (tf + k1 (1 - b + b dl / avgdl))`.
pub fn tf_component(tf: u32, doc_len: u32, avg_doc_len: f64, params: Bm25Params) -> f64 {
    let tf = f64::from(tf);
    let norm = 1.0 - params.b + params.b * f64::from(doc_len) / avg_doc_len;
    tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
}

/// Counts query tokens, keeping first-occurrence order.
pub(crate) fn query_term_counts(index: &InvertedIndex, text: &str) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = Vec::new();
    for tok in index.tokenizer().tokenize(text) {
        match out.iter_mut().find(|(t, _)| *t == tok) {
            Some((_, c)) => *c += 1.0,
            None => out.push((tok, 1.0)),
        }
    }
    out
}

/// Okapi BM25 top-`depth` retrieval. Repeated query terms count once per
/// occurrence. Only documents matching at least one term are returned;
/// ties are broken by external doc id.
pub fn bm25_retrieve(
    index: &InvertedIndex,
    query: &Query,
    params: Bm25Params,
    depth: usize,
) -> Result<RankedList> {
    let terms = query_term_counts(index, &query.text);
    retrieve_weighted(index, &query.query_id, &terms, params, depth)
}

/// BM25 where each term's contribution is multiplied by its weight.
pub fn retrieve_weighted(
    index: &InvertedIndex,
    query_id: &str,
    terms: &[(String, f64)],
    params: Bm25Params,
    depth: usize,
) -> Result<RankedList> {
    params.validate()?;
    if depth == 0 {
        return Err(Error::invalid("retrieval depth must be >= 1"));
    }
    let n = index.doc_count();
    let avgdl = index.avg_doc_length();
    let mut acc = vec![0.0f64; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut hit = vec![false; n];
    for (term, weight) in terms {
        if *weight == 0.0 {
            continue;
        }
        let Some(tid) = index.term_id(term) else {
            continue;
        };
        let postings = index.postings(tid);
        let term_idf = idf(n, postings.len());
        for &(d, tf) in postings {
            let s = term_idf * tf_component(tf, index.doc_length(d), avgdl, params);
            acc[d as usize] += weight * s;
            if !hit[d as usize] {
                hit[d as usize] = true;
                touched.push(d);
            }
        }
    }
    let scored: Vec<(String, f64)> = touched
        .into_iter()
        .map(|d| (index.external_id(d).to_string(), acc[d as usize]))
        .collect();
    let mut list = RankedList::from_scores(query_id, STAGE_TAG, scored);
    list.entries.truncate(depth);
    Ok(list)
}

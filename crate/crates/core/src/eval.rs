//! IR effectiveness metrics over ranked lists and qrels.
//!
//! Relevance means grade > 0. Gains are exponential (`2^grade - 1`), so binary
//! judgments reduce to the usual linear case. MAP@k divides by
//! `min(|relevant|, k)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Qrels, RankedList, Runs};

pub fn ndcg_at_k(ranked: &RankedList, qrels: &Qrels, k: usize) -> f64 {
    let dcg: f64 = ranked
        .entries
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, e)| gain(qrels.grade(&ranked.query_id, &e.doc_id)) / discount(i + 1))
        .sum();
    let mut grades: Vec<u32> = qrels
        .judgments(&ranked.query_id)
        .map(|m| m.values().copied().filter(|&g| g > 0).collect())
        .unwrap_or_default();
    grades.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g) / discount(i + 1))
        .sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

fn gain(grade: u32) -> f64 {
    2f64.powi(grade as i32) - 1.0
}

fn discount(rank: usize) -> f64 {
    ((rank + 1) as f64).log2()
}

fn hits_in_top(ranked: &RankedList, qrels: &Qrels, k: usize) -> usize {
    let rel = qrels.relevant(&ranked.query_id);
    ranked
        .entries
        .iter()
        .take(k)
        .filter(|e| rel.contains(e.doc_id.as_str()))
        .count()
}

pub fn recall_at_k(ranked: &RankedList, qrels: &Qrels, k: usize) -> f64 {
    let total = qrels.relevant(&ranked.query_id).len();
    if total == 0 {
        return 0.0;
    }
    hits_in_top(ranked, qrels, k) as f64 / total as f64
}

/// Reciprocal rank of the first relevant document over the whole list.
pub fn mrr(ranked: &RankedList, qrels: &Qrels) -> f64 {
    let rel = qrels.relevant(&ranked.query_id);
    ranked
        .entries
        .iter()
        .position(|e| rel.contains(e.doc_id.as_str()))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

pub fn map_at_k(ranked: &RankedList, qrels: &Qrels, k: usize) -> f64 {
    let rel = qrels.relevant(&ranked.query_id);
    if rel.is_empty() {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, e) in ranked.entries.iter().take(k).enumerate() {
        if rel.contains(e.doc_id.as_str()) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / rel.len().min(k) as f64
}

pub fn success_at_k(ranked: &RankedList, qrels: &Qrels, k: usize) -> f64 {
    if hits_in_top(ranked, qrels, k) > 0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Metric {
    Ndcg(usize),
    Recall(usize),
    Mrr,
    Map(usize),
    Success(usize),
}

impl Metric {
    /// The headline set: nDCG@10, Recall@1000, MRR, MAP@10, Success@10.
    pub fn defaults() -> Vec<Metric> {
        vec![
            Metric::Ndcg(10),
            Metric::Recall(1000),
            Metric::Mrr,
            Metric::Map(10),
            Metric::Success(10),
        ]
    }

    pub fn compute(&self, ranked: &RankedList, qrels: &Qrels) -> f64 {
        match *self {
            Metric::Ndcg(k) => ndcg_at_k(ranked, qrels, k),
            Metric::Recall(k) => recall_at_k(ranked, qrels, k),
            Metric::Mrr => mrr(ranked, qrels),
            Metric::Map(k) => map_at_k(ranked, qrels, k),
            Metric::Success(k) => success_at_k(ranked, qrels, k),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Ndcg(k) => write!(f, "ndcg@{k}"),
            Metric::Recall(k) => write!(f, "recall@{k}"),
            Metric::Mrr => f.write_str("mrr"),
            Metric::Map(k) => write!(f, "map@{k}"),
            Metric::Success(k) => write!(f, "success@{k}"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "mrr" {
            return Ok(Metric::Mrr);
        }
        let (name, k) = s
            .split_once('@')
            .ok_or_else(|| Error::invalid(format!("metric `{s}` needs a cutoff (e.g. ndcg@10)")))?;
        let k: usize = k
            .parse()
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::invalid(format!("invalid cutoff in `{s}`")))?;
        match name {
            "ndcg" => Ok(Metric::Ndcg(k)),
            "recall" | "r" => Ok(Metric::Recall(k)),
            "map" => Ok(Metric::Map(k)),
            "success" => Ok(Metric::Success(k)),
            _ => Err(Error::invalid(format!("unknown metric `{name}`"))),
        }
    }
}

impl TryFrom<String> for Metric {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Metric> for String {
    fn from(m: Metric) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metrics: Vec<Metric>,
    /// query id → one value per metric, aligned with `metrics`.
    pub per_query: BTreeMap<String, Vec<f64>>,
    /// Macro averages aligned with `metrics`.
    pub aggregate: Vec<f64>,
    /// Queries in qrels without any relevant document.
    pub excluded: Vec<String>,
}

impl MetricReport {
    pub fn value(&self, metric: Metric) -> Option<f64> {
        self.metrics
            .iter()
            .position(|m| *m == metric)
            .map(|i| self.aggregate[i])
    }

    /// Plain-text table: one row per metric.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<14}{:>10}   (queries: {}, excluded: {})\n",
            "metric",
            "mean",
            self.per_query.len(),
            self.excluded.len()
        );
        for (m, v) in self.metrics.iter().zip(&self.aggregate) {
            out.push_str(&format!("{:<14}{:>10.4}\n", m.to_string(), v));
        }
        out
    }

    /// One JSON object per (metric, query) plus one aggregate record per metric.
    pub fn records(&self) -> Vec<serde_json::Value> {
        let mut out = Vec::new();
        for (i, m) in self.metrics.iter().enumerate() {
            for (qid, vals) in &self.per_query {
                out.push(serde_json::json!({"metric": m, "query_id": qid, "value": vals[i]}));
            }
            out.push(serde_json::json!({"metric": m, "query_id": "all", "value": self.aggregate[i]}));
        }
        out
    }
}

/// Evaluates every qrels query with at least one relevant document; queries
/// missing from `runs` score 0.
pub fn evaluate(runs: &Runs, qrels: &Qrels, metrics: &[Metric]) -> MetricReport {
    let mut per_query = BTreeMap::new();
    let mut excluded = Vec::new();
    for qid in qrels.query_ids() {
        if qrels.relevant(qid).is_empty() {
            excluded.push(qid.to_string());
            continue;
        }
        let empty;
        let list = match runs.get(qid) {
            Some(l) => l,
            None => {
                empty = RankedList::empty(qid, "");
                &empty
            }
        };
        per_query.insert(
            qid.to_string(),
            metrics.iter().map(|m| m.compute(list, qrels)).collect::<Vec<_>>(),
        );
    }
    let aggregate = (0..metrics.len())
        .map(|i| {
            if per_query.is_empty() {
                0.0
            } else {
                per_query.values().map(|v: &Vec<f64>| v[i]).sum::<f64>() / per_query.len() as f64
            }
        })
        .collect();
    MetricReport {
        metrics: metrics.to_vec(),
        per_query,
        aggregate,
        excluded,
    }
}

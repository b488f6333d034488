//! Reference implementations written from the formulas alone, without using
//! the library's internals. Shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

/// BM25 over pre-tokenized documents. Returns one score per document.
pub fn bm25_scores(docs: &[Vec<String>], query: &[String], k1: f64, b: f64) -> Vec<f64> {
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|d| d.len() as f64).sum::<f64>() / n;
    docs.iter()
        .map(|d| {
            let dl = d.len() as f64;
            query
                .iter()
                .map(|t| {
                    let df = docs.iter().filter(|x| x.contains(t)).count() as f64;
                    let tf = d.iter().filter(|x| *x == t).count() as f64;
                    if tf == 0.0 {
                        return 0.0;
                    }
                    let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                    idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl))
                })
                .sum()
        })
        .collect()
}

/// Brute-force RRF: gather every contribution per document, add them from
/// largest to smallest, then sort by score desc and id asc.
pub fn rrf(lists: &[Vec<String>], k: f64) -> Vec<(String, f64)> {
    let mut contrib: HashMap<String, Vec<f64>> = HashMap::new();
    for list in lists {
        for (i, d) in list.iter().enumerate() {
            contrib.entry(d.clone()).or_default().push(1.0 / (k + (i + 1) as f64));
        }
    }
    let mut out: Vec<(String, f64)> = contrib
        .into_iter()
        .map(|(d, mut c)| {
            c.sort_by(|a, b| b.partial_cmp(a).unwrap());
            (d, c.iter().sum())
        })
        .collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    out
}

/// Naive metric definitions over a ranked id list and graded judgments.
pub struct Judged<'a> {
    pub ranking: &'a [String],
    pub grades: &'a HashMap<String, u32>,
}

impl Judged<'_> {
    fn relevant(&self) -> BTreeSet<&str> {
        self.grades
            .iter()
            .filter(|(_, g)| **g > 0)
            .map(|(d, _)| d.as_str())
            .collect()
    }

    fn grade(&self, d: &str) -> u32 {
        self.grades.get(d).copied().unwrap_or(0)
    }

    pub fn ndcg(&self, k: usize) -> f64 {
        let gain = |g: u32| 2f64.powi(g as i32) - 1.0;
        let disc = |i: usize| ((i + 2) as f64).log2();
        let dcg: f64 = self.ranking.iter().take(k).enumerate().map(|(i, d)| gain(self.grade(d)) / disc(i)).sum();
        let mut ideal: Vec<u32> = self.grades.values().copied().filter(|g| *g > 0).collect();
        ideal.sort_unstable_by(|a, b| b.cmp(a));
        let idcg: f64 = ideal.iter().take(k).enumerate().map(|(i, g)| gain(*g) / disc(i)).sum();
        if idcg == 0.0 {
            0.0
        } else {
            dcg / idcg
        }
    }

    pub fn recall(&self, k: usize) -> f64 {
        let rel = self.relevant();
        let hit = self.ranking.iter().take(k).filter(|d| rel.contains(d.as_str())).count();
        hit as f64 / rel.len() as f64
    }

    pub fn mrr(&self) -> f64 {
        let rel = self.relevant();
        self.ranking
            .iter()
            .position(|d| rel.contains(d.as_str()))
            .map_or(0.0, |i| 1.0 / (i + 1) as f64)
    }

    pub fn map(&self, k: usize) -> f64 {
        let rel = self.relevant();
        let mut hits = 0.0;
        let mut sum = 0.0;
        for (i, d) in self.ranking.iter().take(k).enumerate() {
            if rel.contains(d.as_str()) {
                hits += 1.0;
                sum += hits / (i + 1) as f64;
            }
        }
        sum / rel.len().min(k) as f64
    }

    pub fn success(&self, k: usize) -> f64 {
        let rel = self.relevant();
        if self.ranking.iter().take(k).any(|d| rel.contains(d.as_str())) {
            1.0
        } else {
            0.0
        }
    }
}

/// Mean, sample standard deviation, CV percent.
pub fn cv(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    (mean, sd, sd / mean * 100.0)
}

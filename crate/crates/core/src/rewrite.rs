//! Stage 0: LLM query reformulation.
//!
//! Verbose tip-of-the-tongue descriptions are sent to a chat model with a
//! fixed system prompt that asks for a short, grounded keyword query. Decoding
//! is greedy. Empty or runaway outputs fall back to the original text so the
//! cascade always has something to retrieve with.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::Query;
use crate::services::{ChatClient, ChatMessage, ChatRequest, DecodingConfig};
use crate::stats::{mean, sample_std};

pub const REWRITER_SYSTEM_PROMPT: &str = r#"You are a query rewriter for a search engine. Your task is to rewrite a complex, verbose, tip-of-the-tongue description into a simple, keyword-focused search query.

Guidelines:
1. Identify the core entity type if implied (e.g., could be a movie, book, song, product, place, person, software tool, concept, etc. - the domain is open-ended). Perform cautious entity expansion by adding closely related aliases or canonical forms only if the anchor entity is directly mentioned or supported by the input text. Never guess, invent, or infer entities that are not explicitly mentioned or unambiguously implied. If unsure, do not expand.
2. Incorporating domain specific vocabulary (e.g., movies: "cinematography", "anthology film"; books: "epistolary novel", "bildungsroman"; science: "biochemical pathway", "quantum phenomenon"; products: "form factor", "backwards compatibility").
3. Extract key details in a domain-agnostic way: concrete attributes such as events, functions, features, relationships, names, dates, locations, behaviors, or other unique identifiers explicitly stated in the input (e.g., plot points for media, specifications for products, symptoms for medical queries, APIs for software, etc.). Do not add new facts.
4. Remove conversational filler ("I think it was...", "It might be...", "I remember seeing...").
5. Remove negative constraints or uncertainty unless crucial ("Not sure if...").
6. Strict grounding rule: Do NOT introduce any information, entities, attributes, or assumptions that are not present in the input query. Every token in the rewritten query must be traceable to the original text or to safe lexical transformations (e.g., synonyms). No external knowledge.
7. Formulate a concise query that a standard search engine (like Google or BM25) would understand. Output ONLY the rewritten query text. Do not output any explanations."#;

pub const STAGE_TAG: &str = "rewrite";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewriteConfig {
    pub model: String,
    pub decoding: DecodingConfig,
    /// Outputs longer than this many characters are treated as degenerate.
    pub max_chars: usize,
}

impl Default for RewriteConfig {
    fn default() -> Self {
        Self {
            model: "Mistral-7B-Instruct-v0.3".into(),
            decoding: DecodingConfig::default(),
            max_chars: 512,
        }
    }
}

pub fn build_rewrite_prompt(query: &Query, cfg: &RewriteConfig) -> Result<ChatRequest> {
    if query.text.trim().is_empty() {
        return Err(Error::invalid(format!(
            "query `{}` has empty text",
            query.query_id
        )));
    }
    Ok(ChatRequest::new(
        &cfg.model,
        vec![
            ChatMessage::system(REWRITER_SYSTEM_PROMPT),
            ChatMessage::user(&query.text),
        ],
        cfg.decoding,
    ))
}

const QUOTE_PAIRS: &[(char, char)] = &[('"', '"'), ('\'', '\''), ('`', '`'), ('\u{201c}', '\u{201d}')];

/// Trims whitespace and any number of matching surrounding quote pairs.
pub fn clean_rewrite(raw: &str) -> &str {
    let mut s = raw.trim();
    loop {
        let stripped = QUOTE_PAIRS.iter().find_map(|&(open, close)| {
            s.strip_prefix(open)
                .and_then(|r| r.strip_suffix(close))
        });
        match stripped {
            Some(inner) => s = inner.trim(),
            None => return s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteOutcome {
    pub query: Query,
    /// The original text was kept because the output was empty or too long.
    pub fallback: bool,
    pub raw: String,
}

pub fn rewrite_query(
    query: &Query,
    client: &dyn ChatClient,
    cfg: &RewriteConfig,
) -> Result<RewriteOutcome> {
    let request = build_rewrite_prompt(query, cfg)?;
    let raw = client.complete(&request).map_err(|source| Error::Stage {
        stage: STAGE_TAG,
        query_id: query.query_id.clone(),
        source,
    })?;
    let cleaned = clean_rewrite(&raw);
    let fallback = cleaned.is_empty() || cleaned.chars().count() > cfg.max_chars;
    let text = if fallback { query.text.as_str() } else { cleaned };
    Ok(RewriteOutcome {
        query: query.rewritten(text, &cfg.model),
        fallback,
        raw,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproStats {
    pub recalls: Vec<f64>,
    pub mu: f64,
    pub sigma: f64,
    pub cv_percent: f64,
}

/// Mean, sample standard deviation and coefficient of variation (σ/μ·100).
pub fn reproducibility_cv(recalls: &[f64]) -> Result<ReproStats> {
    if recalls.len() < 2 {
        return Err(Error::invalid("need at least two runs"));
    }
    let mu = mean(recalls);
    if mu == 0.0 {
        return Err(Error::invalid("coefficient of variation undefined for zero mean"));
    }
    let sigma = sample_std(recalls);
    Ok(ReproStats {
        recalls: recalls.to_vec(),
        mu,
        sigma,
        cv_percent: sigma / mu * 100.0,
    })
}

/// Uniform integer in `0..bound` by rejection, so the result depends only on
/// the ChaCha8 stream.
fn bounded(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % bound;
        }
    }
}

/// Picks `n` of `ids` reproducibly.
///
/// The generator is ChaCha8 seeded with `seed_from_u64(seed)`; a partial
/// Fisher–Yates shuffle over positions draws `n` distinct indices (each draw
/// rejection-sampled from `next_u64`), and the chosen ids are returned in
/// their input order.
pub fn deterministic_sample<T: Clone>(ids: &[T], n: usize, seed: u64) -> Result<Vec<T>> {
    if n > ids.len() {
        return Err(Error::invalid(format!(
            "cannot sample {n} of {} ids",
            ids.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<usize> = (0..ids.len()).collect();
    for i in 0..n {
        let j = i + bounded(&mut rng, (ids.len() - i) as u64) as usize;
        positions.swap(i, j);
    }
    let mut chosen = positions[..n].to_vec();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| ids[i].clone()).collect())
}

/// Hash of everything that determines a rewrite: model, messages, decoding.
pub fn request_hash(request: &ChatRequest) -> String {
    let bytes = serde_json::to_vec(request).expect("request serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedRewrite {
    pub query_id: String,
    pub model: String,
    pub prompt_hash: String,
    pub text: String,
    pub fallback: bool,
}

/// Rewrites keyed by (query id, model, prompt hash), persisted as JSON lines.
#[derive(Debug, Clone, Default)]
pub struct RewriteCache {
    entries: HashMap<(String, String, String), CachedRewrite>,
}

impl RewriteCache {
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut cache = Self::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CachedRewrite =
                serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            cache.insert(rec);
        }
        Ok(cache)
    }

    pub fn get(&self, query_id: &str, model: &str, prompt_hash: &str) -> Option<&CachedRewrite> {
        self.entries
            .get(&(query_id.to_string(), model.to_string(), prompt_hash.to_string()))
    }

    pub fn insert(&mut self, rec: CachedRewrite) {
        self.entries.insert(
            (rec.query_id.clone(), rec.model.clone(), rec.prompt_hash.clone()),
            rec,
        );
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Records sorted by key.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        let mut recs: Vec<&CachedRewrite> = self.entries.values().collect();
        recs.sort_by(|a, b| {
            (&a.query_id, &a.model, &a.prompt_hash).cmp(&(&b.query_id, &b.model, &b.prompt_hash))
        });
        for r in recs {
            writeln!(w, "{}", serde_json::to_string(r)?)?;
        }
        Ok(())
    }
}

/// Rewrites through the cache; only misses reach the client.
pub fn rewrite_cached(
    query: &Query,
    client: &dyn ChatClient,
    cfg: &RewriteConfig,
    cache: &RewriteCache,
) -> Result<(RewriteOutcome, CachedRewrite)> {
    let hash = request_hash(&build_rewrite_prompt(query, cfg)?);
    if let Some(hit) = cache.get(&query.query_id, &cfg.model, &hash) {
        let outcome = RewriteOutcome {
            query: query.rewritten(&hit.text, &cfg.model),
            fallback: hit.fallback,
            raw: hit.text.clone(),
        };
        return Ok((outcome, hit.clone()));
    }
    let outcome = rewrite_query(query, client, cfg)?;
    let rec = CachedRewrite {
        query_id: query.query_id.clone(),
        model: cfg.model.clone(),
        prompt_hash: hash,
        text: outcome.query.text.clone(),
        fallback: outcome.fallback,
    };
    Ok((outcome, rec))
}

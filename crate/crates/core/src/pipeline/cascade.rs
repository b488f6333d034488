//! Per-stage batch execution over a query set, independent of caching.
//! Queries run concurrently on a bounded pool; outputs keep input order.

use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{DenseKind, MockListwise, MockPair, PipelineConfig, ServiceMode};
use crate::cross::{build_hybrid_pool, cross_rerank, CrossEncoder, PoolConfig};
use crate::dense::{dense_rerank, rrf_fuse, DenseScorer, EmbeddingScorer, LateInteractionScorer, RrfConfig};
use crate::error::{Error, Result};
use crate::listwise::{llm_rerank, LlmRerankConfig, RerankFlag};
use crate::model::{Corpus, Qrels, Query, RankedList, Runs};
use crate::rewrite::{rewrite_cached, CachedRewrite, RewriteCache};
use crate::services::mock::{
    EchoChat, HashEmbedder, HashListScorer, ListwiseMock, OraclePairScorer,
};
use crate::services::{
    ChatClient, HttpChat, HttpEmbedder, HttpListScorer, HttpPairScorer, HttpService, PairScorer,
    RetryPolicy,
};
use crate::sparse::{bm25_retrieve, rm3_retrieve, InvertedIndex};

/// Degraded per-query outcome, one record per affected query and stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlagRecord {
    pub query_id: String,
    pub stage: String,
    pub kind: String,
    pub detail: String,
}

impl FlagRecord {
    fn fallback(query_id: &str, stage: &str, detail: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            stage: stage.into(),
            kind: "fallback".into(),
            detail: detail.into(),
        }
    }
}

pub struct Services {
    pub rewrite: Option<Arc<dyn ChatClient>>,
    pub dense: Vec<DenseScorer>,
    pub pair: Option<Arc<dyn PairScorer>>,
    pub listwise: Option<Arc<dyn ChatClient>>,
}

fn http(ep: &super::config::Endpoint, name: &str, retries: usize) -> Result<HttpService> {
    let url = ep
        .url
        .clone()
        .ok_or_else(|| Error::Config(format!("services.{name}.url is required")))?;
    let svc = HttpService::new(url, ep.api_key.clone())
        .map_err(|e| Error::Config(format!("services.{name}: {e}")))?;
    Ok(svc.with_retry(RetryPolicy {
        attempts: retries.max(1) as u32,
        base_delay: Duration::from_millis(250),
    }))
}

impl Services {
    /// Clients for every enabled stage. Oracle mocks read `qrels` and key
    /// listwise answers by the text of `queries`.
    pub fn from_config(cfg: &PipelineConfig, queries: &[Query], qrels: Option<&Qrels>) -> Result<Self> {
        let s = &cfg.services;
        let on = cfg.stages;
        let need_qrels = || {
            qrels.ok_or_else(|| Error::Config("oracle mock services need paths.qrels".into()))
        };
        let mut out = Services {
            rewrite: None,
            dense: Vec::new(),
            pair: None,
            listwise: None,
        };
        match s.mode {
            ServiceMode::Mock => {
                let embed = HashEmbedder { dim: s.mock.dim };
                if on.rewrite {
                    out.rewrite = Some(Arc::new(EchoChat));
                }
                if on.dense {
                    for m in &cfg.dense.models {
                        out.dense.push(match m.kind {
                            DenseKind::Embedding => DenseScorer::Embedding(EmbeddingScorer {
                                model: m.name.clone(),
                                query_prefix: m.query_prefix.clone(),
                                doc_prefix: m.doc_prefix.clone(),
                                embedder: Arc::new(embed),
                            }),
                            DenseKind::LateInteraction => DenseScorer::List(LateInteractionScorer {
                                model: m.name.clone(),
                                scorer: Arc::new(HashListScorer(embed)),
                            }),
                        });
                    }
                }
                if on.cross {
                    out.pair = Some(match s.mock.pair {
                        MockPair::Hash => Arc::new(HashListScorer(embed)),
                        MockPair::Oracle => Arc::new(OraclePairScorer {
                            qrels: need_qrels()?.clone(),
                        }),
                    });
                }
                if on.llm {
                    out.listwise = Some(Arc::new(match s.mock.listwise {
                        MockListwise::Identity => ListwiseMock::identity(),
                        MockListwise::Reverse => ListwiseMock::reverse(),
                        MockListwise::Oracle => ListwiseMock::oracle(queries, need_qrels()?),
                    }));
                }
            }
            ServiceMode::Http => {
                if on.rewrite {
                    out.rewrite = Some(Arc::new(HttpChat(http(&s.rewrite, "rewrite", s.retries)?)));
                }
                if on.dense {
                    for m in &cfg.dense.models {
                        out.dense.push(match m.kind {
                            DenseKind::Embedding => DenseScorer::Embedding(EmbeddingScorer {
                                model: m.name.clone(),
                                query_prefix: m.query_prefix.clone(),
                                doc_prefix: m.doc_prefix.clone(),
                                embedder: Arc::new(HttpEmbedder(http(&s.embedding, "embedding", s.retries)?)),
                            }),
                            DenseKind::LateInteraction => DenseScorer::List(LateInteractionScorer {
                                model: m.name.clone(),
                                scorer: Arc::new(HttpListScorer(http(&s.list_scorer, "list_scorer", s.retries)?)),
                            }),
                        });
                    }
                }
                if on.cross {
                    out.pair = Some(Arc::new(HttpPairScorer(http(&s.pair_scorer, "pair_scorer", s.retries)?)));
                }
                if on.llm {
                    out.listwise = Some(Arc::new(HttpChat(http(&s.listwise, "listwise", s.retries)?)));
                }
            }
        }
        Ok(out)
    }
}

/// Output of one ranking stage over all queries.
#[derive(Debug, Clone, Default)]
pub struct StageOutput {
    pub runs: Runs,
    pub flags: Vec<FlagRecord>,
    /// Intermediate per-model runs (dense stage only).
    pub per_model: Vec<(String, Runs)>,
}

pub struct Cascade<'a> {
    pub cfg: &'a PipelineConfig,
    pub corpus: &'a Corpus,
    pub services: &'a Services,
    pool: rayon::ThreadPool,
}

fn list_for<'r>(runs: &'r Runs, query_id: &str, tag: &str, slot: &'r mut Option<RankedList>) -> &'r RankedList {
    match runs.get(query_id) {
        Some(l) => l,
        None => slot.insert(RankedList::empty(query_id, tag)),
    }
}

fn collect(queries: &[Query], results: Vec<(RankedList, Vec<FlagRecord>)>) -> StageOutput {
    let mut out = StageOutput::default();
    for (q, (list, flags)) in queries.iter().zip(results) {
        if !list.is_empty() {
            out.runs.insert(q.query_id.clone(), list);
        }
        out.flags.extend(flags);
    }
    out
}

impl<'a> Cascade<'a> {
    pub fn new(cfg: &'a PipelineConfig, corpus: &'a Corpus, services: &'a Services) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.services.concurrency.max(1))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self {
            cfg,
            corpus,
            services,
            pool,
        })
    }

    fn per_query<T, F>(&self, queries: &[Query], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&Query) -> T + Sync,
    {
        self.pool.install(|| queries.par_iter().map(&f).collect())
    }

    /// Stage 0. Returns rewritten queries, flags and the cache records used.
    pub fn rewrite(
        &self,
        queries: &[Query],
        cache: &RewriteCache,
    ) -> Result<(Vec<Query>, Vec<FlagRecord>, Vec<CachedRewrite>)> {
        let client = self
            .services
            .rewrite
            .as_deref()
            .ok_or_else(|| Error::Config("rewrite service not configured".into()))?;
        let results = self.per_query(queries, |q| match rewrite_cached(q, client, &self.cfg.rewrite, cache) {
            Ok((outcome, rec)) => {
                let flag = outcome
                    .fallback
                    .then(|| FlagRecord::fallback(&q.query_id, "rewrite", "empty or over-long rewrite"));
                Ok((outcome.query, flag, Some(rec)))
            }
            Err(Error::Stage { source, .. }) => Ok((
                q.clone(),
                Some(FlagRecord::fallback(&q.query_id, "rewrite", source.to_string())),
                None,
            )),
            Err(e) => Err(e),
        });
        let mut out = Vec::with_capacity(queries.len());
        let mut flags = Vec::new();
        let mut records = Vec::new();
        for r in results {
            let (q, f, rec) = r?;
            out.push(q);
            flags.extend(f);
            records.extend(rec);
        }
        Ok((out, flags, records))
    }

    /// Stage 1: BM25, or BM25 + RM3 when enabled, to `bm25.depth`.
    pub fn sparse(&self, index: &InvertedIndex, queries: &[Query], depth: usize) -> Result<Runs> {
        let params = self.cfg.bm25.params()?;
        let rm3 = self.cfg.rm3.enabled.then(|| self.cfg.rm3.config());
        let results = self.per_query(queries, |q| match rm3 {
            Some(c) => rm3_retrieve(index, q, params, c, depth),
            None => bm25_retrieve(index, q, params, depth),
        });
        let mut runs = Runs::new();
        for (q, r) in queries.iter().zip(results) {
            let list = r?;
            if !list.is_empty() {
                runs.insert(q.query_id.clone(), list);
            }
        }
        Ok(runs)
    }

    /// Stage 2: each dense model re-ranks the sparse top `dense.depth`; the
    /// per-model lists are fused with RRF. A failing model falls back to the
    /// sparse order for that query.
    pub fn dense(&self, queries: &[Query], sparse: &Runs) -> Result<StageOutput> {
        let d = &self.cfg.dense;
        let scorers = &self.services.dense;
        if scorers.is_empty() {
            return Err(Error::Config("dense stage has no models".into()));
        }
        let results = self.per_query(queries, |q| -> Result<(Vec<RankedList>, RankedList, Vec<FlagRecord>)> {
            let mut slot = None;
            let input = list_for(sparse, &q.query_id, "bm25", &mut slot).truncated(d.depth);
            if input.is_empty() {
                return Ok((Vec::new(), input, Vec::new()));
            }
            let mut lists = Vec::with_capacity(scorers.len());
            let mut flags = Vec::new();
            for s in scorers {
                match dense_rerank(q, &input, self.corpus, s, d.text_chars) {
                    Ok(l) => lists.push(l),
                    Err(Error::Stage { source, .. }) => {
                        flags.push(FlagRecord::fallback(&q.query_id, "dense", format!("{}: {source}", s.model())));
                        lists.push(input.clone().with_tag(s.tag()));
                    }
                    Err(e) => return Err(e),
                }
            }
            let fused = rrf_fuse(&lists, RrfConfig { k: d.rrf_k })?;
            Ok((lists, fused, flags))
        });
        let mut out = StageOutput::default();
        let mut per_model: Vec<Runs> = vec![Runs::new(); scorers.len()];
        for (q, r) in queries.iter().zip(results) {
            let (lists, fused, flags) = r?;
            for (m, l) in lists.into_iter().enumerate() {
                per_model[m].insert(q.query_id.clone(), l);
            }
            if !fused.is_empty() {
                out.runs.insert(q.query_id.clone(), fused);
            }
            out.flags.extend(flags);
        }
        out.per_model = scorers.iter().map(|s| s.model().to_string()).zip(per_model).collect();
        Ok(out)
    }

    /// Stage 3: hybrid pool of sparse and fused lists scored by the
    /// cross-encoder. A failing query keeps the pool order.
    pub fn cross(&self, queries: &[Query], sparse: &Runs, fused: &Runs, pool_cfg: &PoolConfig) -> Result<StageOutput> {
        let c = &self.cfg.cross;
        let scorer = self
            .services
            .pair
            .clone()
            .ok_or_else(|| Error::Config("pair scorer not configured".into()))?;
        let encoder = CrossEncoder {
            model: c.model.clone(),
            scorer,
            batch_size: c.batch_size,
            text_chars: c.text_chars,
        };
        let results = self.per_query(queries, |q| -> Result<(RankedList, Vec<FlagRecord>)> {
            let (mut s1, mut s2) = (None, None);
            let s = list_for(sparse, &q.query_id, "bm25", &mut s1);
            let f = list_for(fused, &q.query_id, "rrf", &mut s2);
            let pool = build_hybrid_pool(s, f, pool_cfg)?;
            match cross_rerank(q, &pool, self.corpus, &encoder, pool_cfg.output_depth) {
                Ok(l) => Ok((l, Vec::new())),
                Err(Error::Stage { source, .. }) => {
                    let n = pool.len();
                    let kept = pool
                        .entries
                        .iter()
                        .take(pool_cfg.output_depth)
                        .enumerate()
                        .map(|(i, e)| (e.doc_id.clone(), (n - i) as f64))
                        .collect();
                    Ok((
                        RankedList::from_ordered(&q.query_id, crate::cross::STAGE_TAG, kept),
                        vec![FlagRecord::fallback(&q.query_id, "cross", source.to_string())],
                    ))
                }
                Err(e) => Err(e),
            }
        });
        Ok(collect(queries, results.into_iter().collect::<Result<_>>()?))
    }

    /// Stage 4: listwise re-ranking of the stage-3 lists.
    pub fn llm(&self, queries: &[Query], stage3: &Runs, cfg: &LlmRerankConfig) -> Result<StageOutput> {
        let client = self
            .services
            .listwise
            .as_deref()
            .ok_or_else(|| Error::Config("listwise service not configured".into()))?;
        let results = self.per_query(queries, |q| -> Result<(RankedList, Vec<FlagRecord>)> {
            let mut slot = None;
            let input = list_for(stage3, &q.query_id, "cross", &mut slot);
            if input.is_empty() {
                return Ok((input.clone(), Vec::new()));
            }
            let outcome = llm_rerank(q, input, self.corpus, client, cfg)?;
            let flags = match outcome.flag {
                None => Vec::new(),
                Some(RerankFlag::Fallback { error }) => vec![FlagRecord::fallback(&q.query_id, "llm", error)],
                Some(RerankFlag::ParseDegenerate { response }) => vec![FlagRecord {
                    query_id: q.query_id.clone(),
                    stage: "llm".into(),
                    kind: "parse-degenerate".into(),
                    detail: response,
                }],
            };
            Ok((outcome.list, flags))
        });
        Ok(collect(queries, results.into_iter().collect::<Result<_>>()?))
    }
}

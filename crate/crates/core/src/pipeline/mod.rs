//! Stage orchestration with on-disk caching.
//!
//! Each stage writes under `<cache>/<stage-tag>/`: `run.trec`, `flags.jsonl`
//! (one record per degraded query), `metrics.json` when qrels are configured,
//! and finally `key`, the content hash of the stage's inputs and settings.
//! A stage whose stored key matches is a cache hit and is not recomputed.
//! Downstream stages always read their inputs back from these files, so
//! running stages in separate invocations gives the same bytes as one run.

pub mod cascade;
pub mod config;
pub mod store;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

pub use cascade::{Cascade, FlagRecord, Services, StageOutput};
pub use config::PipelineConfig;
use config::{MockListwise, MockPair, ServiceMode};
pub use store::{atomic_write, hash_file, sha256_hex, KeyBuilder, StageDir};

use crate::error::{Error, Result};
use crate::eval::{evaluate, MetricReport};
use crate::model::{parse_corpus, parse_qrels, parse_queries, read_run_file, run_to_string, write_queries, Corpus, Qrels, Query, Runs};
use crate::rewrite::RewriteCache;
use crate::sparse::{IndexStats, InvertedIndex};
use crate::tuning::{
    bm25_sequential_tune, joint_sweep, robust_depth_tune, Split, SplitRuns, TuningRecords,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Rewrite,
    Sparse,
    Dense,
    Cross,
    Llm,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Rewrite, Stage::Sparse, Stage::Dense, Stage::Cross, Stage::Llm];

    /// Directory name under the cache root.
    pub fn dir_name(self) -> &'static str {
        match self {
            Stage::Rewrite => "rewrite",
            Stage::Sparse => "stage1-sparse",
            Stage::Dense => "stage2-dense",
            Stage::Cross => "stage3-cross",
            Stage::Llm => "stage4-llm",
        }
    }

    pub fn number(self) -> usize {
        self as usize
    }

    fn enabled(self, cfg: &PipelineConfig) -> bool {
        let s = cfg.stages;
        match self {
            Stage::Rewrite => s.rewrite,
            Stage::Sparse => s.sparse,
            Stage::Dense => s.dense,
            Stage::Cross => s.cross,
            Stage::Llm => s.llm,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" | "rewrite" => Ok(Stage::Rewrite),
            "1" | "sparse" => Ok(Stage::Sparse),
            "2" | "dense" => Ok(Stage::Dense),
            "3" | "cross" => Ok(Stage::Cross),
            "4" | "llm" => Ok(Stage::Llm),
            other => Err(Error::invalid(format!("unknown stage `{other}`"))),
        }
    }
}

const RUN: &str = "run.trec";
const FLAGS: &str = "flags.jsonl";
const METRICS: &str = "metrics.json";

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub stage: Stage,
    pub cache_hit: bool,
    pub flags: usize,
    pub run_path: PathBuf,
    #[serde(skip)]
    pub metrics: Option<MetricReport>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunSummary {
    pub stages: Vec<StageReport>,
}

impl RunSummary {
    /// Queries that fell back or produced unparseable output, over all stages.
    pub fn fallbacks(&self) -> usize {
        self.stages.iter().map(|s| s.flags).sum()
    }

    pub fn all_cache_hits(&self) -> bool {
        self.stages.iter().all(|s| s.cache_hit)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::path(path, e))
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    Corpus::new(parse_corpus(read_file(path)?.as_slice())?)
}

pub fn load_queries(path: &Path) -> Result<Vec<Query>> {
    parse_queries(read_file(path)?.as_slice())
}

pub fn load_qrels(path: &Path) -> Result<Qrels> {
    parse_qrels(read_file(path)?.as_slice())
}

fn jsonl<T: Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}

fn count_lines(bytes: &[u8]) -> usize {
    bytes.split(|b| *b == b'\n').filter(|l| !l.is_empty()).count()
}

/// Builds the index, writes `<cache>/index/index.json` and returns its stats.
pub fn cmd_index(cfg: &PipelineConfig) -> Result<IndexStats> {
    let corpus_bytes = read_file(&cfg.paths.corpus)?;
    let (index, _) = index_for(cfg, &corpus_bytes, true)?;
    Ok(index.stats())
}

/// Loads the snapshot when its key matches the corpus and tokenizer, otherwise
/// builds (and, if `persist`, saves) a fresh index.
fn index_for(cfg: &PipelineConfig, corpus_bytes: &[u8], persist: bool) -> Result<(InvertedIndex, Corpus)> {
    let corpus = Corpus::new(parse_corpus(corpus_bytes)?)?;
    let mut kb = KeyBuilder::new("index");
    kb.bytes("corpus", sha256_hex(corpus_bytes).as_bytes());
    kb.json("tokenizer", &cfg.bm25.tokenizer())?;
    let key = kb.finish();
    let dir = StageDir::new(&cfg.paths.cache, "index");
    if dir.is_fresh(&key, &["index.json"]) {
        if let Ok(index) = InvertedIndex::load(dir.read("index.json")?.as_slice()) {
            tracing::info!("index snapshot is current");
            return Ok((index, corpus));
        }
    }
    let index = InvertedIndex::build(corpus.docs(), cfg.bm25.tokenizer())?;
    if persist {
        let mut buf = Vec::new();
        index.save(&mut buf)?;
        dir.write("index.json", &buf)?;
        dir.stamp(&key)?;
    }
    Ok((index, corpus))
}

/// What the rest of the configuration contributes to every stage key.
fn services_fingerprint(cfg: &PipelineConfig, qrels_hash: Option<&str>, stage: Stage) -> serde_json::Value {
    let s = &cfg.services;
    match s.mode {
        ServiceMode::Http => {
            let url = |e: &config::Endpoint| e.url.clone();
            serde_json::json!({
                "mode": "http",
                "rewrite": url(&s.rewrite),
                "embedding": url(&s.embedding),
                "list_scorer": url(&s.list_scorer),
                "pair_scorer": url(&s.pair_scorer),
                "listwise": url(&s.listwise),
            })
        }
        ServiceMode::Mock => {
            let oracle = (stage == Stage::Cross && s.mock.pair == MockPair::Oracle)
                || (stage == Stage::Llm && s.mock.listwise == MockListwise::Oracle);
            serde_json::json!({
                "mode": "mock",
                "mock": s.mock,
                "qrels": if oracle { qrels_hash } else { None },
            })
        }
    }
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    force: bool,
    qrels: Option<Qrels>,
    qrels_hash: Option<String>,
    summary: RunSummary,
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a PipelineConfig, force: bool) -> Result<Self> {
        let (qrels, qrels_hash) = match &cfg.paths.qrels {
            Some(p) => {
                let bytes = read_file(p)?;
                (Some(parse_qrels(bytes.as_slice())?), Some(sha256_hex(&bytes)))
            }
            None => (None, None),
        };
        Ok(Self {
            cfg,
            force,
            qrels,
            qrels_hash,
            summary: RunSummary::default(),
        })
    }

    fn dir(&self, stage: Stage) -> StageDir {
        StageDir::new(&self.cfg.paths.cache, stage.dir_name())
    }

    fn key(&self, stage: Stage) -> Result<KeyBuilder> {
        let mut kb = KeyBuilder::new(stage.dir_name());
        kb.json("services", &services_fingerprint(self.cfg, self.qrels_hash.as_deref(), stage))?;
        Ok(kb)
    }

    /// The stage's run file, which must already exist.
    fn prerequisite(&self, stage: Stage) -> Result<(Vec<u8>, Runs)> {
        let dir = self.dir(stage);
        let path = dir.file(RUN);
        if dir.stored_key().is_none() || !path.is_file() {
            return Err(Error::MissingStage {
                stage: stage.dir_name().into(),
                path,
            });
        }
        let bytes = dir.read(RUN)?;
        let runs = read_run_file(bytes.as_slice())?;
        Ok((bytes, runs))
    }

    fn queries_source(&self) -> Result<Vec<u8>> {
        if self.cfg.stages.rewrite {
            let dir = self.dir(Stage::Rewrite);
            let path = dir.file("queries.jsonl");
            if dir.stored_key().is_none() || !path.is_file() {
                return Err(Error::MissingStage {
                    stage: Stage::Rewrite.dir_name().into(),
                    path,
                });
            }
            dir.read("queries.jsonl")
        } else {
            read_file(&self.cfg.paths.queries)
        }
    }

    /// Runs `compute` unless the stored key matches; records the report.
    fn ranking_stage<F>(&mut self, stage: Stage, tag: &str, key: String, compute: F) -> Result<()>
    where
        F: FnOnce() -> Result<StageOutput>,
    {
        let dir = self.dir(stage);
        let hit = !self.force && dir.is_fresh(&key, &[RUN, FLAGS]);
        if hit {
            tracing::info!(stage = %stage, "cache hit");
        } else {
            tracing::info!(stage = %stage, "computing");
            let out = compute()?;
            dir.write(RUN, run_to_string(&out.runs, tag).as_bytes())?;
            for (model, runs) in &out.per_model {
                let safe: String = model
                    .chars()
                    .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
                    .collect();
                dir.write(&format!("model-{safe}.trec"), run_to_string(runs, &format!("dense-{model}")).as_bytes())?;
            }
            dir.write(FLAGS, &jsonl(&out.flags)?)?;
            dir.stamp(&key)?;
        }
        let flags = count_lines(&dir.read(FLAGS)?);
        let metrics = match &self.qrels {
            Some(qrels) => {
                let runs = read_run_file(dir.read(RUN)?.as_slice())?;
                let report = evaluate(&runs, qrels, &self.cfg.eval.metrics);
                let json = serde_json::json!({
                    "metrics": report.metrics.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
                    "aggregate": report.aggregate,
                    "excluded": report.excluded,
                    "per_query": report.records(),
                });
                dir.write(METRICS, serde_json::to_string_pretty(&json)?.as_bytes())?;
                Some(report)
            }
            None => None,
        };
        if flags > 0 {
            tracing::warn!(stage = %stage, flags, "queries fell back");
        }
        self.summary.stages.push(StageReport {
            stage,
            cache_hit: hit,
            flags,
            run_path: dir.file(RUN),
            metrics,
        });
        Ok(())
    }

    fn rewrite(&mut self, services: &Services, corpus: &Corpus) -> Result<()> {
        let cfg = self.cfg;
        let raw = read_file(&cfg.paths.queries)?;
        let queries = parse_queries(raw.as_slice())?;
        let mut kb = self.key(Stage::Rewrite)?;
        kb.bytes("queries", sha256_hex(&raw).as_bytes());
        kb.json("config", &cfg.rewrite)?;
        let key = kb.finish();
        let dir = self.dir(Stage::Rewrite);
        let hit = !self.force && dir.is_fresh(&key, &["queries.jsonl", FLAGS]);
        if !hit {
            let mut cache = if self.force {
                RewriteCache::default()
            } else {
                match std::fs::read(dir.file("cache.jsonl")) {
                    Ok(bytes) => RewriteCache::load(bytes.as_slice())?,
                    Err(_) => RewriteCache::default(),
                }
            };
            let cascade = Cascade::new(cfg, corpus, services)?;
            let (rewritten, flags, records) = cascade.rewrite(&queries, &cache)?;
            for r in records {
                cache.insert(r);
            }
            let mut buf = Vec::new();
            cache.save(&mut buf)?;
            dir.write("cache.jsonl", &buf)?;
            buf.clear();
            write_queries(&mut buf, &rewritten)?;
            dir.write("queries.jsonl", &buf)?;
            dir.write(FLAGS, &jsonl(&flags)?)?;
            dir.stamp(&key)?;
        }
        let flags = count_lines(&dir.read(FLAGS)?);
        self.summary.stages.push(StageReport {
            stage: Stage::Rewrite,
            cache_hit: hit,
            flags,
            run_path: dir.file("queries.jsonl"),
            metrics: None,
        });
        Ok(())
    }
}

/// Stages to execute: the requested ones, or every enabled one.
fn selected(cfg: &PipelineConfig, stages: Option<&[Stage]>) -> Result<Vec<Stage>> {
    let mut out: Vec<Stage> = match stages {
        Some(s) => s.to_vec(),
        None => Stage::ALL.iter().copied().filter(|s| s.enabled(cfg)).collect(),
    };
    out.sort();
    out.dedup();
    if let Some(s) = out.iter().find(|s| !s.enabled(cfg)) {
        return Err(Error::Config(format!("stage `{s}` is disabled in the config")));
    }
    Ok(out)
}

/// Runs the selected stages in order.
pub fn cmd_run(cfg: &PipelineConfig, stages: Option<&[Stage]>, force: bool) -> Result<RunSummary> {
    let todo = selected(cfg, stages)?;
    let mut runner = Runner::new(cfg, force)?;
    let corpus_bytes = read_file(&cfg.paths.corpus)?;
    let corpus = Corpus::new(parse_corpus(corpus_bytes.as_slice())?)?;
    let corpus_hash = sha256_hex(&corpus_bytes);
    let raw_queries = read_file(&cfg.paths.queries)?;
    let services_queries = parse_queries(raw_queries.as_slice())?;

    if todo.contains(&Stage::Rewrite) {
        let services = Services::from_config(cfg, &services_queries, runner.qrels.as_ref())?;
        runner.rewrite(&services, &corpus)?;
    }
    let later: Vec<Stage> = todo.iter().copied().filter(|s| *s != Stage::Rewrite).collect();
    if later.is_empty() {
        return Ok(runner.summary);
    }
    let query_bytes = runner.queries_source()?;
    let queries = parse_queries(query_bytes.as_slice())?;
    let services = Services::from_config(cfg, &queries, runner.qrels.as_ref())?;
    let cascade = Cascade::new(cfg, &corpus, &services)?;

    if later.contains(&Stage::Sparse) {
        let mut kb = runner.key(Stage::Sparse)?;
        kb.bytes("corpus", corpus_hash.as_bytes());
        kb.bytes("queries", sha256_hex(&query_bytes).as_bytes());
        kb.json("bm25", &cfg.bm25)?;
        kb.json("rm3", &cfg.rm3)?;
        let key = kb.finish();
        let tag = if cfg.rm3.enabled { crate::sparse::RM3_STAGE_TAG } else { crate::sparse::STAGE_TAG };
        runner.ranking_stage(Stage::Sparse, tag, key, || {
            let (index, _) = index_for(cfg, &corpus_bytes, false)?;
            Ok(StageOutput {
                runs: cascade.sparse(&index, &queries, cfg.bm25.depth)?,
                ..StageOutput::default()
            })
        })?;
    }

    if later.contains(&Stage::Dense) {
        let (sparse_bytes, sparse) = runner.prerequisite(Stage::Sparse)?;
        let mut kb = runner.key(Stage::Dense)?;
        kb.bytes("corpus", corpus_hash.as_bytes());
        kb.bytes("queries", sha256_hex(&query_bytes).as_bytes());
        kb.bytes("input", sha256_hex(&sparse_bytes).as_bytes());
        kb.json("dense", &cfg.dense)?;
        let key = kb.finish();
        runner.ranking_stage(Stage::Dense, crate::dense::RRF_TAG, key, || cascade.dense(&queries, &sparse))?;
    }

    if later.contains(&Stage::Cross) {
        let (sparse_bytes, sparse) = runner.prerequisite(Stage::Sparse)?;
        let (fused_bytes, fused) = if cfg.stages.dense {
            runner.prerequisite(Stage::Dense)?
        } else {
            (sparse_bytes.clone(), sparse.clone())
        };
        let mut kb = runner.key(Stage::Cross)?;
        kb.bytes("corpus", corpus_hash.as_bytes());
        kb.bytes("queries", sha256_hex(&query_bytes).as_bytes());
        kb.bytes("sparse", sha256_hex(&sparse_bytes).as_bytes());
        kb.bytes("fused", sha256_hex(&fused_bytes).as_bytes());
        kb.json("cross", &cfg.cross)?;
        let key = kb.finish();
        runner.ranking_stage(Stage::Cross, crate::cross::STAGE_TAG, key, || {
            cascade.cross(&queries, &sparse, &fused, &cfg.cross.pool())
        })?;
    }

    if later.contains(&Stage::Llm) {
        let source = [Stage::Cross, Stage::Dense, Stage::Sparse]
            .into_iter()
            .find(|s| s.enabled(cfg))
            .ok_or_else(|| Error::Config("llm stage needs an enabled ranking stage before it".into()))?;
        let (input_bytes, input) = runner.prerequisite(source)?;
        let mut kb = runner.key(Stage::Llm)?;
        kb.bytes("corpus", corpus_hash.as_bytes());
        kb.bytes("queries", sha256_hex(&query_bytes).as_bytes());
        kb.bytes("input", sha256_hex(&input_bytes).as_bytes());
        kb.json("llm", &cfg.llm)?;
        let key = kb.finish();
        runner.ranking_stage(Stage::Llm, crate::listwise::STAGE_TAG, key, || {
            cascade.llm(&queries, &input, &cfg.llm)
        })?;
    }
    Ok(runner.summary)
}

/// Stage 0 only.
pub fn cmd_rewrite(cfg: &PipelineConfig, force: bool) -> Result<RunSummary> {
    if !cfg.stages.rewrite {
        return Err(Error::Config("stages.rewrite is disabled".into()));
    }
    cmd_run(cfg, Some(&[Stage::Rewrite]), force)
}

/// Scores a run file; defaults to the last enabled stage's output.
pub fn cmd_eval(cfg: &PipelineConfig, run: Option<&Path>, qrels: Option<&Path>) -> Result<MetricReport> {
    let run_path = match run {
        Some(p) => p.to_path_buf(),
        None => {
            let last = Stage::ALL
                .iter()
                .rev()
                .find(|s| **s != Stage::Rewrite && s.enabled(cfg))
                .ok_or_else(|| Error::Config("no ranking stage enabled".into()))?;
            StageDir::new(&cfg.paths.cache, last.dir_name()).file(RUN)
        }
    };
    let qrels_path = qrels
        .map(Path::to_path_buf)
        .or_else(|| cfg.paths.qrels.clone())
        .ok_or_else(|| Error::Config("no qrels: set paths.qrels or pass one".into()))?;
    let runs = read_run_file(read_file(&run_path)?.as_slice())?;
    Ok(evaluate(&runs, &load_qrels(&qrels_path)?, &cfg.eval.metrics))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuneTarget {
    Bm25,
    Depth,
    Joint,
}

impl FromStr for TuneTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bm25" => Ok(TuneTarget::Bm25),
            "depth" => Ok(TuneTarget::Depth),
            "joint" => Ok(TuneTarget::Joint),
            other => Err(Error::invalid(format!("unknown tuning target `{other}`"))),
        }
    }
}

impl TuneTarget {
    fn name(self) -> &'static str {
        match self {
            TuneTarget::Bm25 => "bm25",
            TuneTarget::Depth => "depth",
            TuneTarget::Joint => "joint",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub records: Vec<serde_json::Value>,
    /// TOML snippet with the winning settings.
    pub fragment: String,
    pub trail_path: PathBuf,
    pub fragment_path: PathBuf,
}

fn load_splits(cfg: &PipelineConfig) -> Result<Vec<Split>> {
    if cfg.tune.splits.is_empty() {
        return Err(Error::Config("tuning needs [[tune.splits]]".into()));
    }
    cfg.tune
        .splits
        .iter()
        .map(|s| {
            Ok(Split {
                name: s.name.clone(),
                queries: load_queries(&s.queries)?,
                qrels: load_qrels(&s.qrels)?,
            })
        })
        .collect()
}

/// Tunes one target over the configured splits and writes
/// `<cache>/tune/<target>-trail.jsonl` and `<target>-fragment.toml`.
pub fn cmd_tune(cfg: &PipelineConfig, target: TuneTarget) -> Result<TuneOutcome> {
    let splits = load_splits(cfg)?;
    let corpus_bytes = read_file(&cfg.paths.corpus)?;
    let (index, corpus) = index_for(cfg, &corpus_bytes, false)?;
    let t = &cfg.tune;
    let (records, fragment) = match target {
        TuneTarget::Bm25 => {
            let trail = bm25_sequential_tune(&index, &splits, &t.bm25.phase_one()?, &t.bm25.refine(), t.recall_depth)?;
            let k1 = trail.best_value("k1").unwrap_or(cfg.bm25.k1);
            let b = trail.best_value("b").unwrap_or(cfg.bm25.b);
            (trail.records(), format!("[bm25]\nk1 = {k1:?}\nb = {b:?}\n"))
        }
        TuneTarget::Depth => {
            let services = Services {
                rewrite: None,
                dense: Vec::new(),
                pair: None,
                listwise: None,
            };
            let cascade = Cascade::new(cfg, &corpus, &services)?;
            let masters = splits
                .iter()
                .map(|s| {
                    Ok(SplitRuns {
                        name: s.name.clone(),
                        runs: cascade.sparse(&index, &s.queries, t.master_depth)?,
                        qrels: s.qrels.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let tuned = robust_depth_tune(&masters, &t.depth_candidates, t.alpha)?;
            (tuned.records(), format!("[dense]\ndepth = {}\n", tuned.best))
        }
        TuneTarget::Joint => {
            let all_queries: Vec<Query> = splits.iter().flat_map(|s| s.queries.clone()).collect();
            let mut all_qrels = Qrels::default();
            for s in &splits {
                for qid in s.qrels.query_ids() {
                    for (doc, g) in s.qrels.judgments(qid).into_iter().flatten() {
                        all_qrels.insert(qid, doc, *g);
                    }
                }
            }
            let services = Services::from_config(cfg, &all_queries, Some(&all_qrels))?;
            let cascade = Cascade::new(cfg, &corpus, &services)?;
            let jc = t.joint_config();
            let mut pool = cfg.cross.pool();
            pool.output_depth = pool.output_depth.max(jc.k_cross.iter().copied().max().unwrap_or(0));
            let stage3 = splits
                .iter()
                .map(|s| {
                    let sparse = cascade.sparse(&index, &s.queries, cfg.bm25.depth)?;
                    let fused = if cfg.stages.dense {
                        cascade.dense(&s.queries, &sparse)?.runs
                    } else {
                        sparse.clone()
                    };
                    Ok(cascade.cross(&s.queries, &sparse, &fused, &pool)?.runs)
                })
                .collect::<Result<Vec<_>>>()?;
            let result = joint_sweep(&jc, |k_cross, k_llm| {
                let llm = crate::listwise::LlmRerankConfig {
                    k_cross,
                    k_llm,
                    ..cfg.llm.clone()
                };
                splits
                    .iter()
                    .zip(&stage3)
                    .map(|(s, runs)| {
                        let out = cascade.llm(&s.queries, runs, &llm)?;
                        Ok(evaluate(&out.runs, &s.qrels, &[jc.metric]).aggregate[0])
                    })
                    .collect()
            })?;
            let (kc, kl) = result.best;
            (result.records(), format!("[llm]\nk_cross = {kc}\nk_llm = {kl}\n"))
        }
    };
    let dir = StageDir::new(&cfg.paths.cache, "tune");
    let name = target.name();
    dir.write(&format!("{name}-trail.jsonl"), &jsonl(&records)?)?;
    dir.write(&format!("{name}-fragment.toml"), fragment.as_bytes())?;
    Ok(TuneOutcome {
        records,
        fragment,
        trail_path: dir.file(&format!("{name}-trail.jsonl")),
        fragment_path: dir.file(&format!("{name}-fragment.toml")),
    })
}

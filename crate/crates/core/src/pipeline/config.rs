//! Experiment configuration: one TOML file per run.
//!
//! String values may reference environment variables as `${NAME}`; relative
//! paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Metric;
use crate::listwise::LlmRerankConfig;
use crate::rewrite::RewriteConfig;
use crate::sparse::{Bm25Params, Rm3Config, Stemmer, TokenizerConfig};
use crate::tuning::{GridSpec, JointSweepConfig, RefineConfig, DEFAULT_ALPHA};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub queries: PathBuf,
    pub qrels: Option<PathBuf>,
    pub cache: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub rewrite: bool,
    pub sparse: bool,
    pub dense: bool,
    pub cross: bool,
    pub llm: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        Self {
            rewrite: false,
            sparse: true,
            dense: true,
            cross: true,
            llm: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparseSection {
    pub k1: f64,
    pub b: f64,
    pub depth: usize,
    pub stopwords: bool,
    pub stemmer: Stemmer,
}

impl Default for SparseSection {
    fn default() -> Self {
        let p = Bm25Params::default();
        Self {
            k1: p.k1,
            b: p.b,
            depth: 1000,
            stopwords: true,
            stemmer: Stemmer::EnglishSuffix,
        }
    }
}

impl SparseSection {
    pub fn params(&self) -> Result<Bm25Params> {
        Bm25Params::new(self.k1, self.b)
    }

    pub fn tokenizer(&self) -> TokenizerConfig {
        let t = TokenizerConfig {
            stemmer: self.stemmer,
            ..TokenizerConfig::default()
        };
        if self.stopwords {
            t.with_english_stopwords()
        } else {
            t
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rm3Section {
    pub enabled: bool,
    pub feedback_docs: usize,
    pub expansion_terms: usize,
    pub lambda: f64,
}

impl Default for Rm3Section {
    fn default() -> Self {
        let c = Rm3Config::default();
        Self {
            enabled: false,
            feedback_docs: c.feedback_docs,
            expansion_terms: c.expansion_terms,
            lambda: c.lambda,
        }
    }
}

impl Rm3Section {
    pub fn config(&self) -> Rm3Config {
        Rm3Config {
            feedback_docs: self.feedback_docs,
            expansion_terms: self.expansion_terms,
            lambda: self.lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenseKind {
    /// Bi-encoder served by the embedding endpoint.
    Embedding,
    /// Late-interaction model served by the list-scorer endpoint.
    LateInteraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseModel {
    pub name: String,
    pub kind: DenseKind,
    #[serde(default)]
    pub query_prefix: String,
    #[serde(default)]
    pub doc_prefix: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenseSection {
    /// Sparse candidates re-ranked per query (K_dense).
    pub depth: usize,
    pub text_chars: usize,
    pub rrf_k: f64,
    pub models: Vec<DenseModel>,
}

impl Default for DenseSection {
    fn default() -> Self {
        Self {
            depth: 1000,
            text_chars: 2048,
            rrf_k: 60.0,
            models: vec![
                DenseModel {
                    name: "colbertv2.0".into(),
                    kind: DenseKind::LateInteraction,
                    query_prefix: String::new(),
                    doc_prefix: String::new(),
                },
                DenseModel {
                    name: "contriever".into(),
                    kind: DenseKind::Embedding,
                    query_prefix: String::new(),
                    doc_prefix: String::new(),
                },
                DenseModel {
                    name: "e5-large-v2".into(),
                    kind: DenseKind::Embedding,
                    query_prefix: "query: ".into(),
                    doc_prefix: "passage: ".into(),
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossSection {
    pub model: String,
    pub batch_size: usize,
    pub text_chars: usize,
    pub sparse_take: usize,
    pub fused_take: usize,
    pub output_depth: usize,
}

impl Default for CrossSection {
    fn default() -> Self {
        let pool = crate::cross::PoolConfig::default();
        Self {
            model: "monot5-3b-msmarco".into(),
            batch_size: 32,
            text_chars: 2048,
            sparse_take: pool.sparse_take,
            fused_take: pool.fused_take,
            output_depth: pool.output_depth,
        }
    }
}

impl CrossSection {
    pub fn pool(&self) -> crate::cross::PoolConfig {
        crate::cross::PoolConfig {
            sparse_take: self.sparse_take,
            fused_take: self.fused_take,
            output_depth: self.output_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub metrics: Vec<Metric>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            metrics: Metric::defaults(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ServiceMode {
    #[default]
    Http,
    /// In-process deterministic services; no network.
    Mock,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Endpoint {
    pub url: Option<String>,
    pub api_key: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockRewrite {
    /// Returns the query unchanged.
    Echo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockListwise {
    Identity,
    Reverse,
    /// Judged-relevant candidates first; needs qrels.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockPair {
    /// Cosine of hash embeddings.
    Hash,
    /// Relevance grade; needs qrels.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockSection {
    pub rewrite: MockRewrite,
    pub listwise: MockListwise,
    pub pair: MockPair,
    pub dim: usize,
}

impl Default for MockSection {
    fn default() -> Self {
        Self {
            rewrite: MockRewrite::Echo,
            listwise: MockListwise::Identity,
            pair: MockPair::Hash,
            dim: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServicesSection {
    pub mode: ServiceMode,
    /// Queries processed concurrently within a stage.
    pub concurrency: usize,
    pub retries: usize,
    pub rewrite: Endpoint,
    pub embedding: Endpoint,
    pub list_scorer: Endpoint,
    pub pair_scorer: Endpoint,
    pub listwise: Endpoint,
    pub mock: MockSection,
}

impl Default for ServicesSection {
    fn default() -> Self {
        Self {
            mode: ServiceMode::Http,
            concurrency: 8,
            retries: 3,
            rewrite: Endpoint::default(),
            embedding: Endpoint::default(),
            list_scorer: Endpoint::default(),
            pair_scorer: Endpoint::default(),
            listwise: Endpoint::default(),
            mock: MockSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitPaths {
    pub name: String,
    pub queries: PathBuf,
    pub qrels: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Grid {
    pub k1: Vec<f64>,
    pub b: Vec<f64>,
    pub steps: usize,
    pub delta_k1: f64,
    pub delta_b: f64,
}

impl Default for Bm25Grid {
    fn default() -> Self {
        let g = GridSpec::bm25_phase_one();
        let r = RefineConfig::bm25();
        Self {
            k1: g.values("k1").unwrap_or_default().to_vec(),
            b: g.values("b").unwrap_or_default().to_vec(),
            steps: r.steps,
            delta_k1: r.param("k1").map_or(0.4, |p| p.delta),
            delta_b: r.param("b").map_or(0.2, |p| p.delta),
        }
    }
}

impl Bm25Grid {
    pub fn phase_one(&self) -> Result<GridSpec> {
        GridSpec::new(vec![("k1".into(), self.k1.clone()), ("b".into(), self.b.clone())])
    }

    pub fn refine(&self) -> RefineConfig {
        let mut r = RefineConfig::bm25();
        r.steps = self.steps;
        for p in &mut r.params {
            p.delta = if p.name == "k1" { self.delta_k1 } else { self.delta_b };
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JointSection {
    pub k_cross: Vec<usize>,
    pub k_llm: Vec<usize>,
    pub metric: Metric,
}

impl Default for JointSection {
    fn default() -> Self {
        let j = JointSweepConfig::default();
        Self {
            k_cross: j.k_cross,
            k_llm: j.k_llm,
            metric: j.metric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSection {
    pub alpha: f64,
    /// Recall cutoff optimized by BM25 tuning.
    pub recall_depth: usize,
    /// Depth of the master lists sliced during depth tuning.
    pub master_depth: usize,
    pub depth_candidates: Vec<usize>,
    pub bm25: Bm25Grid,
    pub joint: JointSection,
    pub splits: Vec<SplitPaths>,
}

impl Default for TuneSection {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            recall_depth: 1000,
            master_depth: 5000,
            depth_candidates: vec![100, 250, 500, 1000, 2000, 5000],
            bm25: Bm25Grid::default(),
            joint: JointSection::default(),
            splits: Vec::new(),
        }
    }
}

impl TuneSection {
    pub fn joint_config(&self) -> JointSweepConfig {
        JointSweepConfig {
            k_cross: self.joint.k_cross.clone(),
            k_llm: self.joint.k_llm.clone(),
            metric: self.joint.metric,
            alpha: self.alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    pub stages: StageToggles,
    pub bm25: SparseSection,
    pub rm3: Rm3Section,
    pub rewrite: RewriteConfig,
    pub dense: DenseSection,
    pub cross: CrossSection,
    pub llm: LlmRerankConfig,
    pub eval: EvalSection,
    pub services: ServicesSection,
    pub tune: TuneSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            paths: Paths::default(),
            stages: StageToggles::default(),
            bm25: SparseSection::default(),
            rm3: Rm3Section::default(),
            rewrite: RewriteConfig::default(),
            dense: DenseSection::default(),
            cross: CrossSection::default(),
            llm: LlmRerankConfig::default(),
            eval: EvalSection::default(),
            services: ServicesSection::default(),
            tune: TuneSection::default(),
        }
    }
}

/// Replaces every `${NAME}` in `text` using `lookup`.
pub fn interpolate(text: &str, lookup: &dyn Fn(&str) -> Option<String>) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find('}')
            .ok_or_else(|| Error::Config(format!("unterminated `${{` in `{text}`")))?;
        let name = &after[..end];
        let value = lookup(name)
            .ok_or_else(|| Error::Config(format!("environment variable `{name}` is not set")))?;
        out.push_str(&value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn interpolate_value(
    value: &mut toml::Value,
    lookup: &dyn Fn(&str) -> Option<String>,
) -> Result<()> {
    match value {
        toml::Value::String(s) => *s = interpolate(s, lookup)?,
        toml::Value::Array(items) => {
            for v in items {
                interpolate_value(v, lookup)?;
            }
        }
        toml::Value::Table(t) => {
            for (_, v) in t.iter_mut() {
                interpolate_value(v, lookup)?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if !p.as_os_str().is_empty() && p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    /// Parses TOML text, interpolating `${VAR}` with `lookup` and resolving
    /// relative paths against `base`.
    pub fn parse_with(
        text: &str,
        base: &Path,
        lookup: &dyn Fn(&str) -> Option<String>,
    ) -> Result<Self> {
        let mut value: toml::Value =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        interpolate_value(&mut value, lookup)?;
        let mut cfg: PipelineConfig =
            value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        resolve(base, &mut cfg.paths.corpus);
        resolve(base, &mut cfg.paths.queries);
        resolve(base, &mut cfg.paths.cache);
        if let Some(q) = cfg.paths.qrels.as_mut() {
            resolve(base, q);
        }
        for s in &mut cfg.tune.splits {
            resolve(base, &mut s.queries);
            resolve(base, &mut s.qrels);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::path(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse_with(&text, base, &|name| std::env::var(name).ok())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.paths.corpus.as_os_str().is_empty() {
            return bad("paths.corpus is required".into());
        }
        if self.paths.queries.as_os_str().is_empty() {
            return bad("paths.queries is required".into());
        }
        if self.paths.cache.as_os_str().is_empty() {
            return bad("paths.cache is required".into());
        }
        self.bm25.params()?;
        if self.bm25.depth == 0 {
            return bad("bm25.depth must be >= 1".into());
        }
        if self.rm3.enabled {
            self.rm3.config().validate()?;
        }
        if self.stages.dense {
            if self.dense.models.is_empty() {
                return bad("dense stage enabled but dense.models is empty".into());
            }
            if self.dense.depth == 0 || !(self.dense.rrf_k > 0.0) {
                return bad("dense.depth must be >= 1 and dense.rrf_k > 0".into());
            }
        }
        self.cross.pool().validate()?;
        self.llm.validate()?;
        if self.llm.k_cross > self.cross.output_depth {
            return bad(format!(
                "llm.k_cross ({}) exceeds cross.output_depth ({})",
                self.llm.k_cross, self.cross.output_depth
            ));
        }
        if self.eval.metrics.is_empty() {
            return bad("eval.metrics is empty".into());
        }
        if self.services.concurrency == 0 {
            return bad("services.concurrency must be >= 1".into());
        }
        self.check_services()
    }

    fn check_services(&self) -> Result<()> {
        let s = &self.services;
        match s.mode {
            ServiceMode::Http => {
                let need = |on: bool, ep: &Endpoint, name: &str| {
                    if on && ep.url.is_none() {
                        Err(Error::Config(format!("services.{name}.url is required")))
                    } else {
                        Ok(())
                    }
                };
                let uses = |kind| self.dense.models.iter().any(|m| m.kind == kind);
                need(self.stages.rewrite, &s.rewrite, "rewrite")?;
                need(self.stages.dense && uses(DenseKind::Embedding), &s.embedding, "embedding")?;
                need(
                    self.stages.dense && uses(DenseKind::LateInteraction),
                    &s.list_scorer,
                    "list_scorer",
                )?;
                need(self.stages.cross, &s.pair_scorer, "pair_scorer")?;
                need(self.stages.llm, &s.listwise, "listwise")
            }
            ServiceMode::Mock => {
                let oracle = (self.stages.cross && s.mock.pair == MockPair::Oracle)
                    || (self.stages.llm && s.mock.listwise == MockListwise::Oracle);
                if oracle && self.paths.qrels.is_none() {
                    return Err(Error::Config("oracle mock services need paths.qrels".into()));
                }
                Ok(())
            }
        }
    }
}

//! Hyperparameter search: exhaustive grid search, the two-phase sequential
//! adaptive search for BM25, robust candidate-depth selection by virtual
//! slicing of deep master lists, and the joint listwise-depth sweep.
//!
//! Grid cells are evaluated in parallel; every selection is a deterministic
//! reduction over the table in a fixed order, so results never depend on
//! completion order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate, Metric};
use crate::model::{Qrels, Query, Runs};
use crate::sparse::{bm25_retrieve, Bm25Params, InvertedIndex};
use crate::stats::robust_score;

/// Stability penalty applied to the cross-split standard deviation.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Grid values are snapped to 1e-12 so linspace arithmetic yields the literal
/// decimal values (0.8 rather than 0.7999999999999999).
fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    params: Vec<(String, Vec<f64>)>,
}

impl GridSpec {
    pub fn new(params: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::invalid("grid has no parameters"));
        }
        for (name, values) in &params {
            if values.is_empty() {
                return Err(Error::invalid(format!("grid for `{name}` is empty")));
            }
            if values.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::invalid(format!(
                    "grid for `{name}` must be strictly increasing"
                )));
            }
        }
        Ok(Self { params })
    }

    /// Evenly stepped values from `start` to `end` inclusive.
    pub fn stepped(start: f64, end: f64, step: f64) -> Vec<f64> {
        let n = ((end - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| snap(start + i as f64 * step)).collect()
    }

    /// Coarse global grid: k1 over [0.4, 4.0] step 0.4, b over [0.3, 1.0] step 0.1.
    pub fn bm25_phase_one() -> Self {
        Self::new(vec![
            ("k1".into(), Self::stepped(0.4, 4.0, 0.4)),
            ("b".into(), Self::stepped(0.3, 1.0, 0.1)),
        ])
        .expect("static grid is valid")
    }

    pub fn names(&self) -> Vec<&str> {
        self.params.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn values(&self, name: &str) -> Option<&[f64]> {
        self.params
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// Cartesian product in lexicographic order.
    pub fn cells(&self) -> Vec<Vec<f64>> {
        let mut cells = vec![Vec::new()];
        for (_, values) in &self.params {
            cells = cells
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut c = prefix.clone();
                        c.push(*v);
                        c
                    })
                })
                .collect();
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub values: Vec<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub names: Vec<String>,
    pub best: Vec<f64>,
    pub best_score: f64,
    pub table: Vec<GridCell>,
}

impl GridResult {
    pub fn best_value(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.best[i])
    }
}

/// Exhaustive search maximizing `evaluate`; ties go to the lexicographically
/// smallest parameter tuple.
pub fn grid_search<F>(grid: &GridSpec, evaluate: F) -> Result<GridResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let cells = grid.cells();
    let scores: Vec<f64> = cells
        .par_iter()
        .map(|c| evaluate(c))
        .collect::<Result<_>>()?;
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::invalid(format!("objective is NaN at {:?}", cells[i])));
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    let table: Vec<GridCell> = cells
        .into_iter()
        .zip(scores)
        .map(|(values, score)| GridCell { values, score })
        .collect();
    Ok(GridResult {
        names: grid.names().into_iter().map(String::from).collect(),
        best: table[best].values.clone(),
        best_score: table[best].score,
        table,
    })
}

/// Local refinement radius and legal range for one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRefine {
    pub name: String,
    pub delta: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub steps: usize,
    pub params: Vec<ParamRefine>,
}

impl RefineConfig {
    /// δ_k1 = 0.4 with k1 ≥ 0; δ_b = 0.2 with b ∈ [0, 1]; 5 steps.
    pub fn bm25() -> Self {
        Self {
            steps: 5,
            params: vec![
                ParamRefine {
                    name: "k1".into(),
                    delta: 0.4,
                    lower: Some(0.0),
                    upper: None,
                },
                ParamRefine {
                    name: "b".into(),
                    delta: 0.2,
                    lower: Some(0.0),
                    upper: Some(1.0),
                },
            ],
        }
    }

    pub fn param(&self, name: &str) -> Option<&ParamRefine> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::invalid("refine steps must be >= 2"));
        }
        for p in &self.params {
            if !(p.delta > 0.0) {
                return Err(Error::invalid(format!("delta for `{}` must be > 0", p.name)));
            }
        }
        Ok(())
    }
}

/// `linspace(θ − δ, θ + δ, steps)` clamped to the parameter's bounds, with
/// duplicates created by clamping removed (order kept).
pub fn refine_grid(theta_best: f64, param: &ParamRefine, steps: usize) -> Vec<f64> {
    let lo = theta_best - param.delta;
    let span = 2.0 * param.delta;
    let mut out: Vec<f64> = Vec::with_capacity(steps);
    for i in 0..steps {
        let raw = if i + 1 == steps {
            theta_best + param.delta
        } else {
            lo + span * i as f64 / (steps - 1) as f64
        };
        let mut v = snap(raw);
        if let Some(l) = param.lower {
            v = v.max(l);
        }
        if let Some(u) = param.upper {
            v = v.min(u);
        }
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrailStage {
    pub split: String,
    pub grid: GridSpec,
    pub result: GridResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequentialTrail {
    pub names: Vec<String>,
    pub best: Vec<f64>,
    pub stages: Vec<TrailStage>,
}

impl SequentialTrail {
    pub fn best_value(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.best[i])
    }
}

/// Phase I: full grid on the first split. Phase II: for each later split, a
/// refined grid centred on the previous winner. Returns the last winner.
///
/// `evaluate(split_index, params)` must be deterministic.
pub fn sequential_tune<F>(
    splits: &[String],
    phase_one: &GridSpec,
    refine: &RefineConfig,
    evaluate: F,
) -> Result<SequentialTrail>
where
    F: Fn(usize, &[f64]) -> Result<f64> + Sync,
{
    if splits.is_empty() {
        return Err(Error::invalid("sequential tuning needs at least one split"));
    }
    refine.validate()?;
    let names: Vec<String> = phase_one.names().into_iter().map(String::from).collect();
    let mut stages = Vec::with_capacity(splits.len());
    let mut grid = phase_one.clone();
    for (i, split) in splits.iter().enumerate() {
        if i > 0 {
            let prev: &GridResult = &stages.last().map(|s: &TrailStage| &s.result).unwrap();
            let params = names
                .iter()
                .zip(&prev.best)
                .map(|(name, &theta)| {
                    let p = refine.param(name).ok_or_else(|| {
                        Error::invalid(format!("no refinement radius for `{name}`"))
                    })?;
                    Ok((name.clone(), refine_grid(theta, p, refine.steps)))
                })
                .collect::<Result<Vec<_>>>()?;
            grid = GridSpec::new(params)?;
        }
        let mut result = grid_search(&grid, |cell| evaluate(i, cell))?;
        // A refined grid always contains its centre; the carried-forward
        // winner keeps its place unless something scores strictly higher.
        if let Some(prev) = stages.last().map(|s: &TrailStage| s.result.best.clone()) {
            if let Some(cell) = result.table.iter().find(|c| c.values == prev) {
                if cell.score >= result.best_score {
                    result.best = prev;
                }
            }
        }
        tracing::debug!(split = %split, best = ?result.best, score = result.best_score, "tuning stage");
        stages.push(TrailStage {
            split: split.clone(),
            grid: grid.clone(),
            result,
        });
    }
    let best = stages.last().unwrap().result.best.clone();
    Ok(SequentialTrail {
        names,
        best,
        stages,
    })
}

/// A named set of queries with judgments.
#[derive(Debug, Clone)]
pub struct Split {
    pub name: String,
    pub queries: Vec<Query>,
    pub qrels: Qrels,
}

/// Macro Recall@`depth` of BM25 with `params` over a split.
pub fn bm25_recall(
    index: &InvertedIndex,
    split: &Split,
    params: Bm25Params,
    depth: usize,
) -> Result<f64> {
    let mut runs = Runs::new();
    for q in &split.queries {
        runs.insert(q.query_id.clone(), bm25_retrieve(index, q, params, depth)?);
    }
    let report = evaluate(&runs, &split.qrels, &[Metric::Recall(depth)]);
    Ok(report.aggregate[0])
}

/// Sequential BM25 tuning on Recall@`depth`. The grid must name `k1` and `b`.
pub fn bm25_sequential_tune(
    index: &InvertedIndex,
    splits: &[Split],
    phase_one: &GridSpec,
    refine: &RefineConfig,
    depth: usize,
) -> Result<SequentialTrail> {
    let (ik1, ib) = match (
        phase_one.names().iter().position(|n| *n == "k1"),
        phase_one.names().iter().position(|n| *n == "b"),
    ) {
        (Some(a), Some(b)) if phase_one.names().len() == 2 => (a, b),
        _ => return Err(Error::invalid("bm25 grid must have exactly `k1` and `b`")),
    };
    let names: Vec<String> = splits.iter().map(|s| s.name.clone()).collect();
    sequential_tune(&names, phase_one, refine, |i, cell| {
        let params = Bm25Params::new(cell[ik1], cell[ib])?;
        bm25_recall(index, &splits[i], params, depth)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthScore {
    pub k: usize,
    pub per_split: Vec<f64>,
    pub mu: f64,
    pub sigma: f64,
    pub robust: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthTuning {
    pub best: usize,
    pub alpha: f64,
    pub table: Vec<DepthScore>,
}

/// Master lists and judgments for one split.
#[derive(Debug, Clone)]
pub struct SplitRuns {
    pub name: String,
    pub runs: Runs,
    pub qrels: Qrels,
}

/// Picks the candidate depth maximizing `μ(R@K) − α·σ(R@K)` across splits,
/// where each R@K is measured on master lists sliced to depth K. Ties go to
/// the smallest K.
pub fn robust_depth_tune(
    splits: &[SplitRuns],
    candidates: &[usize],
    alpha: f64,
) -> Result<DepthTuning> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate depths"));
    }
    if splits.is_empty() {
        return Err(Error::invalid("depth tuning needs at least one split"));
    }
    if candidates.contains(&0) {
        return Err(Error::invalid("candidate depths must be >= 1"));
    }
    let mut ks = candidates.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let table: Vec<DepthScore> = ks
        .par_iter()
        .map(|&k| {
            let per_split: Vec<f64> = splits
                .iter()
                .map(|s| {
                    let sliced: Runs = s
                        .runs
                        .iter()
                        .map(|(q, l)| (q.clone(), l.truncated(k)))
                        .collect();
                    evaluate(&sliced, &s.qrels, &[Metric::Recall(k)]).aggregate[0]
                })
                .collect();
            let (mu, sigma, robust) = robust_score(&per_split, alpha);
            DepthScore {
                k,
                per_split,
                mu,
                sigma,
                robust,
            }
        })
        .collect();
    let mut best = 0;
    for (i, row) in table.iter().enumerate() {
        if row.robust > table[best].robust {
            best = i;
        }
    }
    Ok(DepthTuning {
        best: table[best].k,
        alpha,
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSweepConfig {
    pub k_cross: Vec<usize>,
    pub k_llm: Vec<usize>,
    pub metric: Metric,
    pub alpha: f64,
}

impl Default for JointSweepConfig {
    fn default() -> Self {
        Self {
            k_cross: vec![20, 30, 50],
            k_llm: vec![5, 10, 20],
            metric: Metric::Ndcg(10),
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointCell {
    pub k_cross: usize,
    pub k_llm: usize,
    pub per_split: Vec<f64>,
    pub mu: f64,
    pub sigma: f64,
    pub robust: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointResult {
    pub best: (usize, usize),
    pub table: Vec<JointCell>,
}

/// Sweeps every legal `(K_cross, K_llm)` pair (`K_llm ≤ K_cross`), scoring
/// each with the robust cross-split aggregate of `run_stage`'s per-split
/// metric values. Ties go to the smaller `K_cross`, then the smaller `K_llm`.
pub fn joint_sweep<F>(cfg: &JointSweepConfig, run_stage: F) -> Result<JointResult>
where
    F: Fn(usize, usize) -> Result<Vec<f64>> + Sync,
{
    if cfg.k_cross.is_empty() || cfg.k_llm.is_empty() {
        return Err(Error::invalid("joint sweep grids must be non-empty"));
    }
    let mut kc = cfg.k_cross.clone();
    kc.sort_unstable();
    kc.dedup();
    let mut kl = cfg.k_llm.clone();
    kl.sort_unstable();
    kl.dedup();
    let pairs: Vec<(usize, usize)> = kc
        .iter()
        .flat_map(|&c| kl.iter().filter(move |&&l| l <= c).map(move |&l| (c, l)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::invalid(
            "no legal (K_cross, K_llm) pair: every K_llm exceeds every K_cross",
        ));
    }
    let table: Vec<JointCell> = pairs
        .par_iter()
        .map(|&(c, l)| {
            let per_split = run_stage(c, l)?;
            if per_split.is_empty() {
                return Err(Error::invalid("run_stage returned no split values"));
            }
            let (mu, sigma, robust) = robust_score(&per_split, cfg.alpha);
            Ok(JointCell {
                k_cross: c,
                k_llm: l,
                per_split,
                mu,
                sigma,
                robust,
            })
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, cell) in table.iter().enumerate() {
        if cell.robust > table[best].robust {
            best = i;
        }
    }
    Ok(JointResult {
        best: (table[best].k_cross, table[best].k_llm),
        table,
    })
}

/// One JSON record per evaluated configuration: params, per-split metrics, aggregate.
pub trait TuningRecords {
    fn records(&self) -> Vec<serde_json::Value>;
}

impl TuningRecords for SequentialTrail {
    fn records(&self) -> Vec<serde_json::Value> {
        let mut out = Vec::new();
        for stage in &self.stages {
            for cell in &stage.result.table {
                let params: serde_json::Map<_, _> = self
                    .names
                    .iter()
                    .zip(&cell.values)
                    .map(|(n, v)| (n.clone(), serde_json::json!(v)))
                    .collect();
                out.push(serde_json::json!({
                    "params": params,
                    "per_split": { stage.split.clone(): cell.score },
                    "aggregate": cell.score,
                }));
            }
        }
        out
    }
}

impl TuningRecords for DepthTuning {
    fn records(&self) -> Vec<serde_json::Value> {
        self.table
            .iter()
            .map(|r| {
                serde_json::json!({
                    "params": { "k": r.k },
                    "per_split": r.per_split,
                    "aggregate": { "mu": r.mu, "sigma": r.sigma, "robust": r.robust, "alpha": self.alpha },
                })
            })
            .collect()
    }
}

impl TuningRecords for JointResult {
    fn records(&self) -> Vec<serde_json::Value> {
        self.table
            .iter()
            .map(|c| {
                serde_json::json!({
                    "params": { "k_cross": c.k_cross, "k_llm": c.k_llm },
                    "per_split": c.per_split,
                    "aggregate": { "mu": c.mu, "sigma": c.sigma, "robust": c.robust },
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(k1: &[f64], b: &[f64]) -> GridSpec {
        GridSpec::new(vec![("k1".into(), k1.to_vec()), ("b".into(), b.to_vec())]).unwrap()
    }

    #[test]
    fn singleton_grid() {
        let r = grid_search(&grid(&[1.0], &[0.5]), |_| Ok(0.3)).unwrap();
        assert_eq!(r.best, [1.0, 0.5]);
        assert_eq!(r.table.len(), 1);
    }

    #[test]
    fn known_optimum() {
        let g = GridSpec::new(vec![("k1".into(), vec![0.4, 0.8, 1.2, 1.6])]).unwrap();
        let r = grid_search(&g, |c| Ok(-(c[0] - 1.2).powi(2))).unwrap();
        assert_eq!(r.best, [1.2]);
    }

    #[test]
    fn tie_prefers_smaller_tuple() {
        let r = grid_search(&grid(&[1.0, 2.0], &[0.1, 0.2]), |c| {
            Ok(if c == [2.0, 0.1] || c == [1.0, 0.2] { 1.0 } else { 0.0 })
        })
        .unwrap();
        assert_eq!(r.best, [1.0, 0.2]);
    }

    #[test]
    fn empty_grid_errors() {
        assert!(GridSpec::new(vec![]).is_err());
        assert!(GridSpec::new(vec![("k1".into(), vec![])]).is_err());
        assert!(GridSpec::new(vec![("k1".into(), vec![1.0, 1.0])]).is_err());
    }

    #[test]
    fn phase_one_shape() {
        let g = GridSpec::bm25_phase_one();
        assert_eq!(g.values("k1").unwrap().len(), 10);
        assert_eq!(g.values("b").unwrap(), [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]);
        assert_eq!(g.values("k1").unwrap()[9], 4.0);
    }

    #[test]
    fn refine_basic() {
        let cfg = RefineConfig::bm25();
        assert_eq!(
            refine_grid(1.2, cfg.param("k1").unwrap(), 5),
            [0.8, 1.0, 1.2, 1.4, 1.6]
        );
    }

    #[test]
    fn refine_clamps_and_dedups() {
        let cfg = RefineConfig::bm25();
        assert_eq!(refine_grid(0.9, cfg.param("b").unwrap(), 5), [0.7, 0.8, 0.9, 1.0]);
        assert_eq!(refine_grid(0.1, cfg.param("b").unwrap(), 5), [0.0, 0.1, 0.2, 0.3]);
    }

    #[test]
    fn refine_two_steps_is_endpoints() {
        let cfg = RefineConfig::bm25();
        assert_eq!(refine_grid(1.2, cfg.param("k1").unwrap(), 2), [0.8, 1.6]);
    }

    #[test]
    fn single_split_equals_grid_search() {
        let g = GridSpec::bm25_phase_one();
        let f = |c: &[f64]| Ok(-(c[0] - 2.3).abs() - (c[1] - 0.45).abs());
        let trail =
            sequential_tune(&["train".into()], &g, &RefineConfig::bm25(), |_, c| f(c)).unwrap();
        let direct = grid_search(&g, f).unwrap();
        assert_eq!(trail.best, direct.best);
        assert_eq!(trail.stages.len(), 1);
    }

    #[test]
    fn planted_optimum_converges() {
        let splits: Vec<String> = ["train", "dev1", "dev2"].map(String::from).to_vec();
        let trail = sequential_tune(
            &splits,
            &GridSpec::bm25_phase_one(),
            &RefineConfig::bm25(),
            |_, c| Ok(-((c[0] - 2.0).powi(2) + (c[1] - 0.6).powi(2))),
        )
        .unwrap();
        assert!((trail.best_value("k1").unwrap() - 2.0).abs() <= 0.2);
        assert!((trail.best_value("b").unwrap() - 0.6).abs() <= 0.1);
    }

    #[test]
    fn later_grids_centred_on_previous_winner() {
        let splits: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let optima = [(1.2, 0.5), (1.6, 0.6), (2.0, 0.7)];
        let trail = sequential_tune(
            &splits,
            &GridSpec::bm25_phase_one(),
            &RefineConfig::bm25(),
            |i, c| Ok(-((c[0] - optima[i].0).powi(2) + (c[1] - optima[i].1).powi(2))),
        )
        .unwrap();
        for w in trail.stages.windows(2) {
            let (prev, next) = (&w[0].result.best, &w[1].grid);
            assert_eq!(next.values("k1").unwrap()[2], prev[0]);
            assert_eq!(next.values("b").unwrap()[2], prev[1]);
        }
    }

    #[test]
    fn constant_surface_keeps_phase_one_winner() {
        let splits: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let trail = sequential_tune(
            &splits,
            &GridSpec::bm25_phase_one(),
            &RefineConfig::bm25(),
            |_, _| Ok(0.5),
        )
        .unwrap();
        let first = &trail.stages[0].result.best;
        assert_eq!(&trail.best, first);
    }

    #[test]
    fn joint_single_pair() {
        let cfg = JointSweepConfig {
            k_cross: vec![30],
            k_llm: vec![10],
            ..Default::default()
        };
        let r = joint_sweep(&cfg, |_, _| Ok(vec![0.4, 0.5])).unwrap();
        assert_eq!(r.best, (30, 10));
    }

    #[test]
    fn joint_filters_illegal_pairs() {
        let cfg = JointSweepConfig {
            k_cross: vec![10, 30],
            k_llm: vec![10, 30],
            ..Default::default()
        };
        let r = joint_sweep(&cfg, |_, _| Ok(vec![0.1])).unwrap();
        let pairs: Vec<_> = r.table.iter().map(|c| (c.k_cross, c.k_llm)).collect();
        assert_eq!(pairs, [(10, 10), (30, 10), (30, 30)]);
        let none = JointSweepConfig {
            k_cross: vec![5],
            k_llm: vec![10],
            ..Default::default()
        };
        assert!(joint_sweep(&none, |_, _| Ok(vec![0.0])).is_err());
    }

    #[test]
    fn joint_prefers_small_window_when_metric_decreases() {
        let cfg = JointSweepConfig {
            k_cross: vec![30, 50, 100],
            k_llm: vec![10, 20],
            ..Default::default()
        };
        let r = joint_sweep(&cfg, |c, _| Ok(vec![1.0 / c as f64, 1.0 / c as f64])).unwrap();
        assert_eq!(r.best, (30, 10));
    }
}

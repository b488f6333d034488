//! Sequential adaptive grid search for BM25 k1 and b over two query splits,
//! maximizing Recall@10 on a synthetic collection.

use tot_cascade::model::Query;
use tot_cascade::sparse::{InvertedIndex, TokenizerConfig};
use tot_cascade::synthetic::{generate, SyntheticSpec};
use tot_cascade::tuning::{bm25_sequential_tune, GridSpec, RefineConfig, Split};

fn main() -> tot_cascade::Result<()> {
    let c = generate(SyntheticSpec {
        docs: 400,
        queries: 40,
        ..SyntheticSpec::default()
    })?;
    let index = InvertedIndex::build(&c.docs, TokenizerConfig::default())?;
    let (a, b): (Vec<Query>, Vec<Query>) = c.queries.iter().cloned().partition(|q| q.query_id < "q-021".to_string());
    let split = |name: &str, queries: Vec<Query>| Split {
        name: name.into(),
        qrels: c.qrels.subset(queries.iter().map(|q| q.query_id.as_str())),
        queries,
    };
    let splits = [split("dev1", a), split("dev2", b)];

    let trail = bm25_sequential_tune(&index, &splits, &GridSpec::bm25_phase_one(), &RefineConfig::bm25(), 10)?;
    for stage in &trail.stages {
        println!(
            "{:<5} cells={:<3} best k1={:.2} b={:.2} recall@10={:.4}",
            stage.split,
            stage.result.table.len(),
            stage.result.best[0],
            stage.result.best[1],
            stage.result.best_score
        );
    }
    println!("selected k1={:?} b={:?}", trail.best_value("k1"), trail.best_value("b"));
    Ok(())
}

//! Runs all four ranking stages over a synthetic collection with the
//! in-process mock services, then runs again to show every stage is a cache hit.
//!
//! cargo run --example hybrid_cascade [output-dir]

use std::path::PathBuf;

use tot_cascade::pipeline::{cmd_run, PipelineConfig};
use tot_cascade::synthetic::{generate, SyntheticSpec};

const CONFIG: &str = r#"
[paths]
corpus = "corpus.jsonl"
queries = "queries.jsonl"
qrels = "qrels.txt"
cache = "cache"

[services]
mode = "mock"
concurrency = 4

[services.mock]
pair = "oracle"
listwise = "oracle"

[eval]
metrics = ["ndcg@10", "recall@100", "mrr", "success@10"]
"#;

fn main() -> tot_cascade::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("tot-cascade-demo"));
    generate(SyntheticSpec::default())?.write_to(&dir)?;
    std::fs::write(dir.join("pipeline.toml"), CONFIG)?;
    let cfg = PipelineConfig::load(&dir.join("pipeline.toml"))?;

    for pass in ["first", "second"] {
        println!("== {pass} pass");
        let summary = cmd_run(&cfg, None, false)?;
        for s in &summary.stages {
            let ndcg = s
                .metrics
                .as_ref()
                .and_then(|m| m.value("ndcg@10".parse().ok()?))
                .unwrap_or(f64::NAN);
            println!(
                "{:<14} {:<9} nDCG@10={ndcg:.4} flags={}",
                s.stage.to_string(),
                if s.cache_hit { "cache hit" } else { "computed" },
                s.flags
            );
        }
    }
    println!("artifacts under {}", cfg.paths.cache.display());
    Ok(())
}

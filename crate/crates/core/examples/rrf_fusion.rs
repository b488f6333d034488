//! Reciprocal Rank Fusion of three rankings for one query.

use tot_cascade::dense::{rrf_fuse, RrfConfig};
use tot_cascade::model::RankedList;

fn ranking(tag: &str, ids: &[&str]) -> RankedList {
    let n = ids.len() as f64;
    RankedList::from_ordered(
        "q1",
        tag,
        ids.iter().enumerate().map(|(i, d)| (d.to_string(), n - i as f64)).collect(),
    )
}

fn main() -> tot_cascade::Result<()> {
    let lists = [
        ranking("colbert", &["d3", "d1", "d7", "d2"]),
        ranking("contriever", &["d1", "d3", "d2", "d9"]),
        ranking("e5", &["d8", "d1", "d3", "d4"]),
    ];
    for l in &lists {
        println!("{:<11} {}", l.stage_tag, l.doc_ids().collect::<Vec<_>>().join(" "));
    }
    let fused = rrf_fuse(&lists, RrfConfig::default())?;
    println!("\nfused (k = 60)");
    for e in &fused.entries {
        println!("{:>2}. {:<3} {:.6}", e.rank, e.doc_id, e.score);
    }
    Ok(())
}

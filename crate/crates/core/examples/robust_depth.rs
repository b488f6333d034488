//! Robust candidate-depth selection: S_K = mean(R@K) - 0.5 * std(R@K) across
//! splits, computed by slicing one deep master ranking per query.

use tot_cascade::model::{Qrels, RankedList, Runs};
use tot_cascade::tuning::{robust_depth_tune, SplitRuns, DEFAULT_ALPHA};

/// A master list per query with the relevant document at a given rank.
fn split(name: &str, relevant_ranks: &[usize]) -> SplitRuns {
    let mut runs = Runs::new();
    let mut qrels = Qrels::default();
    for (i, &r) in relevant_ranks.iter().enumerate() {
        let qid = format!("{name}-q{i}");
        let ids: Vec<(String, f64)> = (1..=5000)
            .map(|k| (if k == r { "rel".to_string() } else { format!("d{k}") }, -(k as f64)))
            .collect();
        runs.insert(qid.clone(), RankedList::from_ordered(&qid, "bm25", ids));
        qrels.insert(&qid, "rel", 1);
    }
    SplitRuns {
        name: name.into(),
        runs,
        qrels,
    }
}

fn main() -> tot_cascade::Result<()> {
    let splits = [
        split("train", &[3, 40, 250, 900, 4000]),
        split("dev1", &[1, 80, 600, 1500, 6000]),
        split("dev2", &[10, 20, 450, 700, 2500]),
    ];
    let tuned = robust_depth_tune(&splits, &[100, 500, 1000, 2000, 5000], DEFAULT_ALPHA)?;
    println!("{:>5} {:>8} {:>8} {:>8}", "K", "mu", "sigma", "S_K");
    for row in &tuned.table {
        println!("{:>5} {:>8.4} {:>8.4} {:>8.4}", row.k, row.mu, row.sigma, row.robust);
    }
    println!("selected K = {}", tuned.best);
    Ok(())
}
